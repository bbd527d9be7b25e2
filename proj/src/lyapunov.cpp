#include "qpkam/lyapunov.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <random>

namespace qpkam {

std::vector<std::vector<double>> sample_phases(int d, int count, unsigned seed) {
  std::vector<std::vector<double>> out(count, std::vector<double>(d));
  if (seed == 0) {
    // Kronecker sequence with square roots of primes
    static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    for (int j = 0; j < count; ++j)
      for (int a = 0; a < d; ++a) {
        double g = a == 0 ? 0.5 : std::sqrt(primes[a % 8]);
        double x = (a == 0) ? (j + 0.5) / count : (j + 0.5) * g;
        out[j][a] = x - std::floor(x);
      }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto& th : out)
    for (auto& x : th) x = U(rng);
  return out;
}

namespace {

// Sum of log|R_kk| along one orbit with QR renormalisation.
std::vector<double> orbit_logs(const Cocycle& c, std::vector<double> th, long n, long burn) {
  const int m = c.m();
  Mat Q = Mat::Identity(m, m);
  std::vector<double> acc(m, 0.0);
  for (long t = 0; t < n + burn; ++t) {
    Mat M = c.eval(th) * Q;
    Eigen::HouseholderQR<Mat> qr(M);
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    Q = qr.householderQ() * Mat::Identity(m, m);
    for (int k = 0; k < m; ++k) {
      double r = std::abs(R(k, k));
      if (!(r > 0) || !std::isfinite(r)) {
        json w;
        w["step"] = t;
        w["theta"] = th;
        throw Error(ErrorKind::Overflow, "degenerate QR step in Lyapunov iteration", w);
      }
      if (t >= burn) acc[k] += std::log(r);
    }
    for (int a = 0; a < c.d(); ++a) {
      th[a] += c.freq.alpha[a];
      th[a] -= std::floor(th[a]);
    }
  }
  return acc;
}

std::vector<double> finish(std::vector<std::vector<double>> per, long n) {
  const int m = static_cast<int>(per.at(0).size());
  std::vector<double> g(m, 0.0);
  for (const auto& p : per)
    for (int k = 0; k < m; ++k) g[k] += p[k];
  for (auto& x : g) x /= (static_cast<double>(n) * per.size());
  std::sort(g.begin(), g.end(), std::greater<>());
  return g;
}

}  // namespace

std::vector<double> lyapunov_exponents_serial(const Cocycle& c, const LyapunovOptions& opt) {
  auto phases = sample_phases(c.d(), opt.theta_samples, opt.seed);
  std::vector<std::vector<double>> per(phases.size());
  for (size_t j = 0; j < phases.size(); ++j) per[j] = orbit_logs(c, phases[j], opt.n, opt.burn_in);
  return finish(std::move(per), opt.n);
}

std::vector<double> lyapunov_exponents(const Cocycle& c, const LyapunovOptions& opt) {
  auto phases = sample_phases(c.d(), opt.theta_samples, opt.seed);
  std::vector<std::vector<double>> per(phases.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < static_cast<long>(phases.size()); ++j) {
    try {
      per[j] = orbit_logs(c, phases[j], opt.n, opt.burn_in);
    } catch (...) {
#pragma omp critical
      err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return finish(std::move(per), opt.n);
}

double fibred_entropy(const Cocycle& c, const LyapunovOptions& opt, double positive_tol) {
  auto g = lyapunov_exponents(c, opt);
  double s = 0.0;
  for (double x : g)
    if (x > positive_tol) s += x;
  return s;
}

}  // namespace qpkam
