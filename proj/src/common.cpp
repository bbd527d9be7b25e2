#include "qpkam/common.hpp"

#include <Eigen/SVD>

#include "qpkam/chebyshev.hpp"

namespace qpkam {

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::StripOverreach: return "strip-overreach";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::SingularFactor: return "singular-factor";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::DegreeCap: return "degree-cap";
    case ErrorKind::NearSingular: return "near-singular";
    case ErrorKind::NotSeparated: return "not-separated";
    case ErrorKind::DecompositionInstability: return "decomposition-instability";
    case ErrorKind::ResonanceBudget: return "resonance-budget";
    case ErrorKind::ResonanceStructure: return "resonance-structure";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::InvalidCertificate: return "invalid-certificate";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Diophantine: return "diophantine";
    case ErrorKind::Divergence: return "divergence";
  }
  return "unknown";
}

json to_json(const LogValue& v) {
  json j;
  j["log"] = v.ln;
  if (v.representable())
    j["value"] = v.value();
  else
    j["value"] = nullptr;
  return j;
}

double log_add(double la, double lb) {
  if (la == -HUGE_VAL) return lb;
  if (lb == -HUGE_VAL) return la;
  double hi = std::max(la, lb), lo = std::min(la, lb);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sub(double la, double lb) {
  if (lb == -HUGE_VAL) return la;
  if (!(la > lb)) return -HUGE_VAL;
  return la + std::log1p(-std::exp(lb - la));
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

double log_binomial(int n, int k) { return log_factorial(n) - log_factorial(k) - log_factorial(n - k); }

double opnorm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() == 1 && A.cols() == 1) return std::abs(A(0, 0));
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

std::vector<cplx> bernstein_ellipse(double a, double b, double delta, int samples) {
  const double c = 0.5 * (b - a);
  const double major = c + delta;
  const double minor = std::sqrt(std::max(0.0, major * major - c * c));
  const double mid = 0.5 * (a + b);
  std::vector<cplx> z(samples);
  for (int i = 0; i < samples; ++i) {
    double t = kTwoPi * i / samples;
    z[i] = cplx(mid + major * std::cos(t), minor * std::sin(t));
  }
  return z;
}

}  // namespace qpkam
