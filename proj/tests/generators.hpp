#pragma once

#include <random>

#include "qpkam/chebyshev.hpp"
#include "qpkam/frequency.hpp"
#include "qpkam/poly.hpp"
#include "qpkam/torus_matrix.hpp"

namespace qpkam::gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(g_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g_); }
  cplx complex(double r = 1.0) { return {uniform(-r, r), uniform(-r, r)}; }
  std::mt19937_64& engine() { return g_; }

 private:
  std::mt19937_64 g_;
};

inline Mat matrix(Rng& r, int m, double scale = 1.0) {
  Mat A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = r.complex(scale);
  return A;
}

// Diagonalisable with eigenvalues on an annulus, conditioned by a near-identity change of basis.
inline Mat spread_matrix(Rng& r, int m, double rmin = 0.5, double rmax = 1.5) {
  Mat D = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) D(i, i) = std::polar(r.uniform(rmin, rmax), r.uniform(0.0, kTwoPi));
  Mat S = Mat::Identity(m, m) + matrix(r, m, 0.2);
  return S * D * S.inverse();
}

inline Poly monic(Rng& r, int deg, double scale = 1.0) {
  Poly p(deg + 1);
  p[0] = 1.0;
  for (int i = 1; i <= deg; ++i) p[i] = r.complex(scale);
  return p;
}

inline TorusMatrix torus(Rng& r, int m, int d, int N, double decay, double scale = 1.0) {
  TorusMatrix f(m, d);
  for (const auto& k : l1_ball(d, N)) f.at(k) = matrix(r, m, scale * std::exp(-decay * l1(k)));
  return f;
}

// Real polynomial of degree <= deg as a Chebyshev family on [a,b].
inline ScalarFamily real_poly_family(Rng& r, int deg, double a, double b) {
  std::vector<double> roots(deg);
  for (double& x : roots) x = r.uniform(a - 0.2, b + 0.2);
  const double lead = r.uniform(0.5, 2.0) * (r.integer(0, 1) ? 1.0 : -1.0);
  const double shift = r.uniform(-0.05, 0.05);
  return ScalarFamily::sample(a, b, std::max(deg, 1) + 2, [&](double x) {
    double v = lead;
    for (double z : roots) v *= (x - z);
    return cplx(v + shift, 0.0);
  });
}

inline Frequency golden() { return Frequency::certify({(std::sqrt(5.0) - 1.0) / 2.0}, 2000); }

}  // namespace qpkam::gen
