#pragma once

#include <vector>

#include "qpkam/torus_matrix.hpp"

namespace qpkam {

// Uniform grid on T^d with P points per axis, FFT-backed sampling and analysis.
class FourierGrid {
 public:
  FourierGrid(int d, int P);

  int d() const { return d_; }
  int P() const { return P_; }
  int size() const { return total_; }
  std::vector<double> point(int idx) const;

  // Requires f.max_mode() < P/2 in every axis.
  std::vector<Mat> sample(const TorusMatrix& f) const;
  // Coefficients with |k|_1 <= radius; aliasing is the caller's concern.
  TorusMatrix analyse(const std::vector<Mat>& values, int radius, double h_nominal) const;

  static int size_for(int radius);

 private:
  int index_of(const MultiIndex& k) const;
  int d_, P_, total_;
};

}  // namespace qpkam
