#include "qpkam/cocycle.hpp"

#include <Eigen/LU>

namespace qpkam {

Mat Cocycle::eval(const std::vector<double>& theta) const { return A + F.eval(theta); }

Mat iterate_cocycle(const Cocycle& c, const std::vector<double>& theta, long n) {
  const int m = c.m();
  Mat out = Mat::Identity(m, m);
  std::vector<double> th(theta);
  if (n >= 0) {
    for (long t = 0; t < n; ++t) {
      out = c.eval(th) * out;
      for (int a = 0; a < c.d(); ++a) th[a] += c.freq.alpha[a];
    }
    return out;
  }
  for (long t = 0; t < -n; ++t) {
    for (int a = 0; a < c.d(); ++a) th[a] -= c.freq.alpha[a];
    Eigen::PartialPivLU<Mat> lu(c.eval(th));
    Mat inv = lu.inverse();
    if (!inv.allFinite()) {
      json w;
      w["step"] = t;
      throw Error(ErrorKind::SingularFactor, "singular factor while iterating backwards", w);
    }
    out = out * inv;
  }
  return out;
}

StripNormEstimate norm_h_delta(const std::function<TorusMatrix(cplx)>& f, double a, double b, double h,
                               double delta, double delta_nominal, int ellipse_samples) {
  if (delta > delta_nominal * (1.0 + 1e-12)) {
    json w;
    w["delta"] = delta;
    w["delta_nominal"] = delta_nominal;
    throw Error(ErrorKind::StripOverreach, "parameter neighbourhood beyond the nominal width", w);
  }
  StripNormEstimate est;
  est.samples = ellipse_samples;
  for (cplx z : bernstein_ellipse(a, b, delta, ellipse_samples)) est.value = std::max(est.value, norm_h(f(z), h));
  // endpoints of the real interval as well; cheap and catches delta = 0
  est.value = std::max(est.value, norm_h(f(cplx(a, 0)), h));
  est.value = std::max(est.value, norm_h(f(cplx(b, 0)), h));
  return est;
}

StripNormEstimate norm_h_delta(const ChebFamily<TorusMatrix>& f, double h, double delta, double delta_nominal,
                               int ellipse_samples) {
  return norm_h_delta([&f](cplx z) { return f.eval(z); }, f.a(), f.b(), h, delta, delta_nominal, ellipse_samples);
}

}  // namespace qpkam
