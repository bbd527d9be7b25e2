#pragma once

#include <vector>

#include "qpkam/torus_matrix.hpp"

namespace qpkam {

struct Truncation {
  TorusMatrix low;   // |k| <= N
  TorusMatrix high;  // |k| > N
};
Truncation truncate(const TorusMatrix& f, int N);

std::vector<int> block_offsets(const std::vector<int>& sizes);

// Retained modes: block (i,j), 0 <= |k| <= N, minus diagonal k = 0 and the resonant mode kappa_i - kappa_j of
// distinct blocks in one group.
struct Sector {
  std::vector<int> sizes;
  std::vector<int> group_of;      // per block; empty means all singletons
  std::vector<MultiIndex> kappa;  // per block; empty means zero
  int N = 0;

  int blocks() const { return static_cast<int>(sizes.size()); }
  bool resonant(int i, int j, const MultiIndex& k) const;
  bool contains(int i, int j, const MultiIndex& k) const;
  static Sector single(int m, int N) { return Sector{{m}, {}, {}, N}; }
};

// Projection onto / away from the retained modes.
TorusMatrix project(const TorusMatrix& f, const Sector& s);
TorusMatrix project_out(const TorusMatrix& f, const Sector& s);

struct Divisor {
  double value = HUGE_VAL;
  int i = -1, j = -1;
  MultiIndex k;
};

// Mode-wise solver for A_ii Y_ij(k) - e^{2 pi i <k,alpha>} Y_ij(k) A_jj = H_ij(k), A block diagonal.
class HomologicalSolver {
 public:
  HomologicalSolver(const Mat& A, const Sector& s, const Frequency& freq, bool parallel = true);

  // Smallest |sigma_a - e_k tau_b| over retained modes and eigenvalue pairs of the blocks.
  Divisor min_divisor() const;

  struct Result {
    TorusMatrix Y;         // high part
    TorusMatrix Y_lo;      // correction from quad residual sweeps
    TorusMatrix residual;  // A Y - Y(.+alpha) A - H on retained modes
  };
  // refine = number of extra sweeps with the residual formed in quad precision.
  Result solve(const TorusMatrix& H, int refine = 2) const;

  int tasks() const { return static_cast<int>(tasks_.size()); }

 private:
  struct Task {
    int i, j;
    MultiIndex k;
    cplx e;
    Eigen::PartialPivLU<Mat> lu;
  };
  Mat A_;
  Sector s_;
  Frequency freq_;
  bool parallel_;
  std::vector<int> off_;
  std::vector<Mat> blocks_;
  std::vector<std::vector<cplx>> eig_;
  std::vector<Task> tasks_;
};

// Y on retained modes with A Y - Y(.+alpha) A = H.
TorusMatrix homological_solve(const Mat& A, const TorusMatrix& H, const Frequency& freq, const Sector& s);

// Q = e^{-Y(.+alpha)} (A+F) e^{Y} - A - F - (A Y - Y(.+alpha) A), evaluated on a grid and analysed up to radius.
TorusMatrix conjugation_remainder(const Mat& A, const TorusMatrix& F, const TorusMatrix& Y, const Frequency& freq,
                                  int radius);

// Full e^{-Y(.+alpha)} (A+F) e^{Y} - A on a grid; reference for tests (double precision throughout).
TorusMatrix conjugated_direct(const Mat& A, const TorusMatrix& F, const TorusMatrix& Y, const Frequency& freq,
                              int radius);

// exp(X) - I by Taylor series; X is expected to be small.
Mat expm1_small(const Mat& X);
// exp(X) - I - X, summed from the quadratic term.
Mat expm2_small(const Mat& X);

}  // namespace qpkam
