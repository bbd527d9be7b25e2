#pragma once

#include <functional>

#include "qpkam/chebyshev.hpp"
#include "qpkam/torus_matrix.hpp"

namespace qpkam {

// (alpha, A + F(theta)) on T^d x GL(m, C).
struct Cocycle {
  Frequency freq;
  Mat A;
  TorusMatrix F;

  int m() const { return static_cast<int>(A.rows()); }
  int d() const { return freq.d(); }
  Mat eval(const std::vector<double>& theta) const;
};

// A(theta; n); negative n uses the inverse convention so the cocycle identity holds on Z.
Mat iterate_cocycle(const Cocycle& c, const std::vector<double>& theta, long n);

// Analytic one-parameter family lambda -> (A(lambda), F(., lambda)).
struct CocycleFamily {
  Frequency freq;
  int m = 0;
  double h = 0.0;
  std::function<Mat(cplx)> A;
  std::function<TorusMatrix(cplx)> F;

  Cocycle at(double lambda) const { return {freq, A(cplx(lambda, 0.0)), F(cplx(lambda, 0.0))}; }
};

// Lower bound for sup over the complex delta-neighbourhood of [a,b] of |f(., lambda)|_h.
struct StripNormEstimate {
  double value = 0.0;
  bool lower_bound = true;
  int samples = 0;
};

StripNormEstimate norm_h_delta(const std::function<TorusMatrix(cplx)>& f, double a, double b, double h,
                               double delta, double delta_nominal, int ellipse_samples = 128);
StripNormEstimate norm_h_delta(const ChebFamily<TorusMatrix>& f, double h, double delta, double delta_nominal,
                               int ellipse_samples = 128);

}  // namespace qpkam
