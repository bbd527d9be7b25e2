#pragma once

#include <string>
#include <vector>

#include "qpkam/chebyshev.hpp"

namespace qpkam {

// sup_{0<=j<=r+1} |f^(j)| <= C and sup_{0<=j<=r} |f^(j)| >= c on [a,b].
struct PyartliCert {
  double C = 1.0;
  double c = 1.0;
  int r = 1;
  double a = 0.0, b = 1.0;
  bool grid_certified = false;
};

// |f|_delta <= M and sup_{0<=j<=r} |f^(j)| >= c on (a - delta/2, b + delta/2).
struct TransverseCert {
  LogValue M;
  double delta = 1.0;
  LogValue c;
  int r = 1;
  double a = 0.0, b = 1.0;
};

json to_json(const PyartliCert& p);
json to_json(const TransverseCert& t);

// Cauchy estimates: ((r+1)! M / min{1, delta^{r+1}}, c, r).
PyartliCert pyartli_from_transverse(const TransverseCert& t);

// Pyartli data measured on a grid, with multiplicative slack on both constants.
PyartliCert grid_certify(const ScalarFamily& f, int r, int samples = 2048, double slack = 0.05);

struct Interval {
  double lo = 0.0, hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x > lo && x < hi; }
};

struct ExclusionResult {
  std::vector<Interval> intervals;
  int segments = 0;
  bool grid_certified = false;
  double count_bound = 0.0;   // 2^r (2C(b-a)/c + 1)
  double length_bound = 0.0;  // 2 (2 sigma / c)^{1/r}
};

// Intervals covering {x in [a,b] : |f(x)| < sigma}; requires 0 < sigma <= c/2.
ExclusionResult exclude_small_values(const ScalarFamily& f, const PyartliCert& cert, double sigma);

std::vector<Interval> merge_intervals(std::vector<Interval> v);

// Product of l transverse functions.
TransverseCert product_transversality(const std::vector<TransverseCert>& certs);
// One factor of an l-fold product bounded by M.
TransverseCert factor_transversality(const TransverseCert& product, int l, LogValue M);

// Multiset certificate to decomposition certificate (l clusters, m = matrix size, R = spectral radius bound).
TransverseCert multiset_to_decomposition(const TransverseCert& cert, int l, int m, double R);
// Decomposition certificate back to the multiset.
TransverseCert decomposition_to_multiset(const TransverseCert& cert, int l, int m, double R);

struct TransversalityReport {
  bool pass = false;
  double min_sup = HUGE_VAL;  // min over the grid of max_{j<=r} |d^j g / d lambda^j|
  double max_abs = 0.0;       // max |g| seen on the sampled ellipse
  double witness_lambda = 0.0;
  double witness_u = 0.0;
  int r = 0;
};

// g(lambda,u) of Sigma(A(lambda)) against the certificate, over sampled u in [0,1) and lambda.
TransversalityReport multiset_transversality_check(const MatFamily& A, const TransverseCert& cert, int u_samples,
                                                   int lambda_samples);
TransversalityReport transversality_at_u(const MatFamily& A, const TransverseCert& cert, double u,
                                         int lambda_samples);

// Drops trailing Chebyshev coefficients below rel times the largest (degree stays >= 1).
ScalarFamily chop(const ScalarFamily& f, double rel = 1e-13);

// g(., u) as a Chebyshev family on [a,b].
ScalarFamily g_family(const MatFamily& A, double u, double a, double b, int degree);

// Smallest r <= r_max whose grid minimum of max_{j<=r}|d^j g| is at least floor, over sampled u.
struct EmpiricalTransversality {
  int r = 0;
  double c = 0.0;
  double M = 0.0;
  bool found = false;
};
EmpiricalTransversality fit_transversality(const MatFamily& A, double a, double b, double delta, int r_max,
                                           int u_samples, int lambda_samples, double floor = 1e-8);

}  // namespace qpkam
