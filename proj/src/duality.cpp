#include "qpkam/duality.hpp"

#include <algorithm>
#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <exception>

#include "qpkam/poly.hpp"

namespace qpkam {

namespace {

cplx scalar_eval(const TorusMatrix& W, const std::vector<double>& theta) {
  cplx s = 0.0;
  for (const auto& [k, C] : W.coeffs()) {
    double u = 0.0;
    for (size_t t = 0; t < k.size(); ++t) u += k[t] * theta[t];
    s += C(0, 0) * expi2pi(u);
  }
  return s;
}

// Best continued-fraction convergent p/q of x with q <= n.
std::pair<long, long> convergent(double x, long n) {
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const long a = static_cast<long>(std::floor(r));
    const long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > n) break;
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
    const double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return {p1, q1};
}

struct Layout {
  int sites = 0;
  int side = 0;
  int d = 1;
  std::vector<double> alpha;
  bool wrap = false;
};

Layout layout_of(const LongRangeOperator& op, int n, Boundary bc) {
  Layout L;
  L.alpha = op.freq.alpha;
  L.d = op.kind == OperatorKind::dual_1d ? 1 : op.freq.d();
  L.side = n;
  if (bc == Boundary::periodic) {
    if (L.d != 1 || op.freq.d() != 1) throw Error(ErrorKind::Domain, "periodic truncation needs d = 1");
    const auto [p, q] = convergent(op.freq.alpha[0], n);
    L.alpha = {static_cast<double>(p) / static_cast<double>(q)};
    L.side = static_cast<int>(q);
    L.wrap = true;
  }
  L.sites = 1;
  for (int t = 0; t < L.d; ++t) L.sites *= L.side;
  return L;
}

// Calls put(i, j, value) for every nonzero entry with i <= j, and diag(i, value).
template <class Put>
void for_entries(const LongRangeOperator& op, const Layout& L, const std::vector<double>& phase, Put&& put) {
  const int N = L.sites;
  if (op.kind == OperatorKind::dual_1d) {
    for (int i = 0; i < N; ++i) {
      std::vector<double> th = phase;
      for (size_t t = 0; t < th.size(); ++t) th[t] += i * L.alpha[t];
      put(i, i, op.V.coef(0) + op.eps * scalar_eval(op.W, th).real());
      for (int k = 1; k <= op.V.ell; ++k) {
        int j = i + k;  // H(i, i+k) = V_{-k}
        if (j >= N) {
          if (!L.wrap) continue;
          j -= N;
        }
        if (j > i)
          put(i, j, op.V.coef(-k));
        else
          put(j, i, op.V.coef(k));
      }
    }
    return;
  }
  if (op.eps == 0.0) throw Error(ErrorKind::Domain, "primal operator needs eps != 0");
  const int d = L.d, S = L.side;
  auto index = [&](const std::vector<int>& s) {
    int id = 0;
    for (int t = d - 1; t >= 0; --t) id = id * S + s[t];
    return id;
  };
  std::vector<int> s(d, 0);
  for (int id = 0; id < N; ++id) {
    int r = id;
    for (int t = 0; t < d; ++t) s[t] = r % S, r /= S;
    double x = phase[0];
    for (int t = 0; t < d; ++t) x += s[t] * L.alpha[t];
    cplx diag = op.V.eval(x) / op.eps;
    for (const auto& [k, C] : op.W.coeffs()) {
      if (is_zero(k)) {
        diag += C(0, 0).real();
        continue;
      }
      std::vector<int> t2(d);
      bool inside = true;
      for (int t = 0; t < d; ++t) {
        t2[t] = s[t] - k[t];  // H(s, s-k) = W_k
        if (t2[t] < 0 || t2[t] >= S) {
          if (!L.wrap) inside = false;
          t2[t] = ((t2[t] % S) + S) % S;
        }
      }
      if (!inside) continue;
      const int j = index(t2);
      if (j > id) put(id, j, C(0, 0));
    }
    put(id, id, diag);
  }
}

int bandwidth(const LongRangeOperator& op) {
  if (op.kind == OperatorKind::dual_1d) return op.V.ell;
  int b = 0;
  for (const auto& kv : op.W.coeffs()) b = std::max(b, l1(kv.first));
  return b;
}

}  // namespace

double TrigPotential::eval(double x) const {
  cplx s = 0.0;
  for (int k = -ell; k <= ell; ++k) s += coef(k) * expi2pi(k * x);
  return s.real();
}

void TrigPotential::validate() const {
  if (ell < 1 || static_cast<int>(V_hat.size()) != 2 * ell + 1)
    throw Error(ErrorKind::Domain, "potential needs 2 ell + 1 coefficients with ell >= 1");
  if (std::abs(coef(ell)) == 0.0) throw Error(ErrorKind::Domain, "leading coefficient V_ell vanishes");
  const double scale = std::max(1.0, std::abs(coef(ell)));
  for (int k = 0; k <= ell; ++k)
    if (std::abs(coef(-k) - std::conj(coef(k))) > 1e-12 * scale)
      throw Error(ErrorKind::Domain, "potential is not real: V_{-k} != conj(V_k)", {{"k", k}});
}

TrigPotential TrigPotential::cosine(double amp) { return from({amp, 0.0, amp}); }

TrigPotential TrigPotential::from(std::vector<cplx> V_hat) {
  TrigPotential V;
  V.ell = (static_cast<int>(V_hat.size()) - 1) / 2;
  V.V_hat = std::move(V_hat);
  V.validate();
  return V;
}

json to_json(const TrigPotential& V) {
  json c = json::array();
  for (cplx z : V.V_hat) c.push_back({z.real(), z.imag()});
  return {{"ell", V.ell}, {"V_hat", c}};
}

TorusMatrix cosine_W(int d, double amp) {
  TorusMatrix W(1, d);
  MultiIndex e(d, 0);
  e[0] = 1;
  W.at(e) = Mat::Constant(1, 1, amp);
  W.at(negate(e)) = Mat::Constant(1, 1, amp);
  return W;
}

Mat companion_matrix(const TrigPotential& V, cplx E) {
  V.validate();
  const int l = V.ell, m = 2 * l;
  const cplx lead = V.coef(l);
  Mat A = Mat::Zero(m, m);
  for (int j = 0; j < m; ++j) A(0, j) = -V.coef(l - 1 - j) / lead;
  A(0, l - 1) = (E - V.coef(0)) / lead;
  for (int i = 1; i < m; ++i) A(i, i - 1) = 1.0;
  return A;
}

Cocycle companion_cocycle(const TrigPotential& V, const TorusMatrix& W, double eps, cplx E, const Frequency& freq) {
  Cocycle c;
  c.freq = freq;
  c.A = companion_matrix(V, E);
  const int m = 2 * V.ell;
  c.F = TorusMatrix(m, freq.d());
  if (eps != 0.0)
    for (const auto& [k, C] : W.coeffs()) {
      Mat M = Mat::Zero(m, m);
      M(0, V.ell - 1) = -eps * C(0, 0) / V.coef(V.ell);
      c.F.coeffs().emplace(k, std::move(M));
    }
  return c;
}

CocycleFamily companion_family(const TrigPotential& V, const TorusMatrix& W, double eps, const Frequency& freq) {
  CocycleFamily f;
  f.freq = freq;
  f.m = 2 * V.ell;
  f.h = W.h_nominal();
  f.A = [V](cplx E) { return companion_matrix(V, E); };
  f.F = [V, W, eps, freq](cplx E) { return companion_cocycle(V, W, eps, E, freq).F; };
  return f;
}

const char* boundary_name(Boundary b) { return b == Boundary::periodic ? "periodic" : "dirichlet"; }

Boundary boundary_from(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "dirichlet") return Boundary::dirichlet;
  throw Error(ErrorKind::Schema, "unknown boundary '" + s + "'");
}

Mat truncation(const LongRangeOperator& op, int n, Boundary bc, const std::vector<double>& phase) {
  const Layout L = layout_of(op, n, bc);
  Mat H = Mat::Zero(L.sites, L.sites);
  for_entries(op, L, phase, [&](int i, int j, cplx v) {
    H(i, j) += v;
    if (i != j) H(j, i) += std::conj(v);
  });
  return H;
}

std::vector<double> truncation_eigenvalues(const LongRangeOperator& op, int n, Boundary bc,
                                           const std::vector<double>& phase) {
  if (n < 64) throw Error(ErrorKind::Domain, "truncation size must be at least 64");
  const Layout L = layout_of(op, n, bc);
  const int N = L.sites;
  std::vector<double> w(N);
  const int kd = bandwidth(op);
  if (!L.wrap && L.d == 1 && kd < N) {
    const int ld = kd + 1;
    std::vector<cplx> ab(static_cast<size_t>(ld) * N, 0.0);
    for_entries(op, L, phase, [&](int i, int j, cplx v) { ab[(kd + i - j) + static_cast<size_t>(j) * ld] += v; });
    for (int i = 0; i < N; ++i) {
      auto& dgl = ab[kd + static_cast<size_t>(i) * ld];
      if (std::abs(dgl.imag()) > 1e-12 * (1.0 + std::abs(dgl)))
        throw Error(ErrorKind::Domain, "truncation not Hermitian: complex diagonal");
      dgl = dgl.real();
    }
    cplx dummy;
    const int info = LAPACKE_zhbev(LAPACK_COL_MAJOR, 'N', 'U', N, kd, ab.data(), ld, w.data(), &dummy, 1);
    if (info != 0) throw Error(ErrorKind::Domain, "banded eigensolver failed", {{"info", info}});
    return w;
  }
  Mat H = truncation(op, n, bc, phase);
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + H.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::Domain, "truncation not Hermitian");
  const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', N, H.data(), N, w.data());
  if (info != 0) throw Error(ErrorKind::Domain, "eigensolver failed", {{"info", info}});
  return w;
}

double IdsCurve::count(double E) const {
  if (eigenvalues.empty()) return 0.0;
  return static_cast<double>(std::upper_bound(eigenvalues.begin(), eigenvalues.end(), E) - eigenvalues.begin()) /
         static_cast<double>(eigenvalues.size());
}

json to_json(const IdsCurve& c, bool with_eigenvalues) {
  json j = {{"E", c.E_grid},
            {"N", c.N_values},
            {"truncation_size", c.truncation_size},
            {"boundary", boundary_name(c.boundary)}};
  if (with_eigenvalues) j["eigenvalues"] = c.eigenvalues;
  return j;
}

IdsCurve ids(const LongRangeOperator& op, const std::vector<double>& E_grid, int n_trunc, int phase_samples,
             Boundary bc, bool parallel) {
  if (phase_samples < 1) throw Error(ErrorKind::Domain, "need at least one phase sample");
  const int pd = op.kind == OperatorKind::dual_1d ? op.freq.d() : 1;
  const auto phases = sample_phases(pd, phase_samples, 0);
  std::vector<std::vector<double>> ev(phases.size());
  std::vector<std::exception_ptr> errs(phases.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int s = 0; s < static_cast<int>(phases.size()); ++s) {
    try {
      ev[s] = truncation_eigenvalues(op, n_trunc, bc, phases[s]);
    } catch (...) {
      errs[s] = std::current_exception();
    }
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  IdsCurve c;
  c.boundary = bc;
  c.truncation_size = static_cast<int>(ev[0].size());
  for (auto& v : ev) c.eigenvalues.insert(c.eigenvalues.end(), v.begin(), v.end());
  std::sort(c.eigenvalues.begin(), c.eigenvalues.end());
  c.E_grid = E_grid;
  for (double E : E_grid) c.N_values.push_back(c.count(E));
  return c;
}

double free_ids(double E) {
  if (E <= -2.0) return 0.0;
  if (E >= 2.0) return 1.0;
  return 1.0 - std::acos(E / 2.0) / kPi;
}

double log_potential(const IdsCurve& c, double E) {
  const auto& x = c.eigenvalues;
  const size_t M = x.size();
  if (M < 2) throw Error(ErrorKind::Domain, "IDS has too few eigenvalues for the log potential");
  auto G = [](double u) { return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u; };
  double s = 0.0;
  for (size_t j = 0; j < M; ++j) {
    const double lo = j == 0 ? x[0] - 0.5 * (x[1] - x[0]) : 0.5 * (x[j - 1] + x[j]);
    const double hi = j + 1 == M ? x[M - 1] + 0.5 * (x[M - 1] - x[M - 2]) : 0.5 * (x[j] + x[j + 1]);
    if (hi - lo <= 0.0)
      s += std::log(std::abs(E - x[j]));
    else
      s += (G(E - lo) - G(E - hi)) / (hi - lo);
  }
  return s / static_cast<double>(M);
}

double ThoulessResult::max_abs() const {
  double m = 0.0;
  for (double r : residual) m = std::max(m, std::abs(r));
  return m;
}

double fibred_entropy_of(const Cocycle& c, const LyapunovOptions& lyap) {
  bool constant = true;
  for (const auto& kv : c.F.coeffs())
    if (kv.second.cwiseAbs().maxCoeff() > 0.0) constant = false;
  if (!constant) return fibred_entropy(c, lyap);
  double s = 0.0;
  for (cplx z : eigenvalues(c.A)) s += std::max(0.0, std::log(std::abs(z)));
  return s;
}

ThoulessResult thouless_check(const IdsCurve& c, const TrigPotential& V, const TorusMatrix& W, double eps,
                              const Frequency& freq, const std::vector<double>& E_grid, const LyapunovOptions& lyap) {
  if (c.eigenvalues.empty()) throw Error(ErrorKind::Domain, "IDS curve carries no eigenvalues");
  ThoulessResult r;
  const double lnV = std::log(std::abs(V.coef(V.ell)));
  for (double E : E_grid) {
    const double g = fibred_entropy_of(companion_cocycle(V, W, eps, cplx(E, 0.0), freq), lyap);
    const double p = log_potential(c, E);
    r.E.push_back(E);
    r.gamma.push_back(g);
    r.potential.push_back(p);
    r.residual.push_back(g - (p - lnV));
  }
  return r;
}

DualityComparison duality_check(const TrigPotential& V, const TorusMatrix& W, double eps, const Frequency& freq,
                                const std::vector<double>& E_grid, int n_trunc, int phase_samples, Boundary bc) {
  if (eps == 0.0) throw Error(ErrorKind::Domain, "duality check needs eps != 0");
  DualityComparison out;
  const LongRangeOperator dual{OperatorKind::dual_1d, V, W, eps, freq};
  const LongRangeOperator primal{OperatorKind::primal, V, W, eps, freq};
  std::vector<double> scaled;
  for (double E : E_grid) scaled.push_back(E / eps);
  out.dual = ids(dual, E_grid, n_trunc, phase_samples, bc);
  out.primal = ids(primal, scaled, n_trunc, phase_samples, bc);
  for (size_t i = 0; i < E_grid.size(); ++i)
    out.sup_diff = std::max(out.sup_diff, std::abs(out.dual.N_values[i] - out.primal.N_values[i]));
  return out;
}

HolderResult holder_estimate(const IdsCurve& c, int ell) {
  const int n = static_cast<int>(c.E_grid.size());
  if (n < 1000) throw Error(ErrorKind::Domain, "Holder estimate needs at least 1000 grid points", {{"points", n}});
  HolderResult r;
  r.threshold = 1.0 / (2.0 * ell) - 1.0 / (4.0 * ell);
  const double step = (c.E_grid.back() - c.E_grid.front()) / (n - 1);
  const double width = c.E_grid.back() - c.E_grid.front();
  for (int w = 4; w * step <= width / 8.0; w *= 2) {
    double osc = 0.0;
    for (int i = 0; i + w < n; ++i) osc = std::max(osc, c.N_values[i + w] - c.N_values[i]);
    r.scales.push_back(w * step);
    r.oscillation.push_back(osc);
  }
  if (r.scales.size() < 2) throw Error(ErrorKind::Domain, "Holder estimate needs two window scales");
  for (double o : r.oscillation)
    if (!(o > 0.0)) {
      r.exponent = 0.0;
      r.pass = false;
      return r;
    }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(r.scales.size());
  for (size_t i = 0; i < r.scales.size(); ++i) {
    const double x = std::log(r.scales[i]), y = std::log(r.oscillation[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  r.exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  r.pass = r.exponent >= r.threshold;
  return r;
}

json to_json(const LipschitzReport& r) {
  return {{"E", r.E},
          {"C", r.C},
          {"C_tilde", r.C_tilde},
          {"eps_imag", r.eps_imag},
          {"increment", r.increment},
          {"increment_bound", r.increment_bound},
          {"ids_increment", r.ids_increment},
          {"lipschitz", r.lipschitz},
          {"lipschitz_bound", r.lipschitz_bound},
          {"chain_ok", r.chain_ok},
          {"notes", r.notes}};
}

std::vector<LipschitzReport> lipschitz_diagnostic(const TrigPotential& V, const TorusMatrix& W, double eps,
                                                  const Frequency& freq, const IdsCurve& c,
                                                  const std::vector<ReducibleSample>& samples,
                                                  const std::vector<double>& eps_imag, const LyapunovOptions& lyap,
                                                  double tol) {
  std::vector<LipschitzReport> out;
  const double lead = std::abs(V.coef(V.ell));
  for (const auto& s : samples) {
    LipschitzReport r;
    r.E = s.E;
    r.C = s.norm_B * s.norm_B_inv / lead;
    r.C_tilde = s.norm_D_inv * r.C;
    r.lipschitz_bound = 4.0 * V.ell * r.C_tilde / std::log(2.0);
    const double g0 = fibred_entropy_of(companion_cocycle(V, W, eps, cplx(s.E, 0.0), freq), lyap);
    const double admissible = std::max(std::pow(s.norm_B, -4.0), std::pow(s.norm_B_inv, -4.0));
    for (double e : eps_imag) {
      const double g1 = fibred_entropy_of(companion_cocycle(V, W, eps, cplx(s.E, e), freq), lyap);
      const double inc = g1 - g0;
      const double bound = V.ell * r.C_tilde * e;
      const double dN = c.count(s.E + e) - c.count(s.E - e);
      r.eps_imag.push_back(e);
      r.increment.push_back(inc);
      r.increment_bound.push_back(bound);
      r.ids_increment.push_back(dN);
      r.lipschitz = std::max(r.lipschitz, dN / (2.0 * e));
      if (!(e < admissible)) r.notes.push_back("eps' = " + std::to_string(e) + " above max{|B|^-4, |B^-1|^-4}");
      if (inc > bound + tol) {
        r.chain_ok = false;
        r.notes.push_back("increment above l C~ eps' at eps' = " + std::to_string(e));
      }
      if (0.5 * std::log(2.0) * dN > inc + tol) {
        r.chain_ok = false;
        r.notes.push_back("IDS increment above the entropy increment at eps' = " + std::to_string(e));
      }
    }
    if (r.lipschitz > r.lipschitz_bound) {
      r.chain_ok = false;
      r.notes.push_back("local Lipschitz constant above 4 l C~ / ln 2");
    }
    out.push_back(std::move(r));
  }
  return out;
}

json to_json(const NondegeneracyReport& r) {
  json f = json::array();
  for (const auto& x : r.finite)
    f.push_back({{"u", x.u},
                 {"twisted", x.twisted},
                 {"degree", x.degree},
                 {"max_abs", x.max_abs},
                 {"nonzero", x.nonzero}});
  return {{"cert", to_json(r.cert)},
          {"r", r.fit.r},
          {"c", r.fit.c},
          {"M", r.fit.M},
          {"finite", f},
          {"finite_ok", r.finite_ok}};
}

TransverseCert certify_family(const MatFamily& A, double a, double b, double delta, int r_max, int u_samples,
                              int lambda_samples, EmpiricalTransversality* fit) {
  const auto f = fit_transversality(A, a, b, delta, r_max, u_samples, lambda_samples);
  if (fit) *fit = f;
  if (!f.found)
    throw Error(ErrorKind::InvalidCertificate, "no transversality order r <= r_max on the sampled grid",
                {{"r_max", r_max}, {"a", a}, {"b", b}});
  TransverseCert c;
  c.M = LogValue::of(std::max(f.M, 1e-300));
  c.c = LogValue::of(f.c);
  c.delta = delta;
  c.r = f.r;
  c.a = a;
  c.b = b;
  return c;
}

namespace {

// Numerical degree in E of E -> value(E), from samples on a circle.
FiniteRootCheck degree_in_E(const std::function<cplx(cplx)>& value, int max_degree) {
  FiniteRootCheck r;
  const int K = 2 * max_degree + 8;
  const double rho = 1.0;
  std::vector<cplx> s(K);
  for (int k = 0; k < K; ++k) s[k] = value(rho * expi2pi(static_cast<double>(k) / K));
  std::vector<double> mag(K);
  for (int j = 0; j < K; ++j) {
    cplx c = 0.0;
    for (int k = 0; k < K; ++k) c += s[k] * std::conj(expi2pi(static_cast<double>(j * k) / K));
    mag[j] = std::abs(c) / K / std::pow(rho, j);
    r.max_abs = std::max(r.max_abs, mag[j]);
  }
  r.nonzero = r.max_abs > 1e-12;
  for (int j = 0; j < K; ++j)
    if (mag[j] > 1e-10 * r.max_abs) r.degree = j;
  return r;
}

}  // namespace

NondegeneracyReport nondegeneracy_certify(const TrigPotential& V, double a, double b, double delta, int r_max,
                                          int u_samples, int lambda_samples) {
  V.validate();
  NondegeneracyReport rep;
  const auto A = MatFamily::sample(a, b, 2, [&](double E) { return companion_matrix(V, cplx(E, 0.0)); });
  rep.cert = certify_family(A, a, b, delta, r_max, u_samples, lambda_samples, &rep.fit);

  const int l = V.ell, m = 2 * l;
  auto f_E = [&](cplx E) {
    Poly p(m + 1);
    for (int i = 0; i <= m; ++i) p[i] = V.coef(l - i);
    p[l] -= E;
    return p;
  };
  for (int j = 0; j < 8; ++j) {
    const double u = (j + 0.5) / 8.0;
    auto res = [&](cplx E) {
      const Poly p = f_E(E);
      Poly q = p;
      for (int i = 0; i <= m; ++i) q[i] *= expi2pi(u * (m - i));
      return resultant(p, q);
    };
    auto chk = degree_in_E(res, 2 * m);
    chk.u = u;
    rep.finite.push_back(chk);
  }
  auto disc = [&](cplx E) {
    const Poly p = f_E(E);
    Poly dp(m);
    for (int i = 0; i < m; ++i) dp[i] = p[i] * static_cast<double>(m - i);
    return resultant(p, dp);
  };
  auto chk = degree_in_E(disc, 2 * m);
  chk.twisted = false;
  rep.finite.push_back(chk);
  for (const auto& f : rep.finite) rep.finite_ok = rep.finite_ok && f.nonzero;
  return rep;
}

}  // namespace qpkam
