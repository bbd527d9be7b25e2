#pragma once

#include <algorithm>
#include <functional>
#include <set>

#include "qpkam/homological.hpp"
#include "qpkam/poly.hpp"
#include "qpkam/spectral.hpp"

namespace qpkam::oracle {

inline cplx g_product(const Mat& A, double u) {
  Eigen::ComplexEigenSolver<Mat> es(A);
  const auto& s = es.eigenvalues();
  cplx p = 1.0;
  for (int i = 0; i < s.size(); ++i)
    for (int j = 0; j < s.size(); ++j)
      if (i != j) p *= s[i] - expi2pi(u) * s[j];
  return p;
}

using Partition = std::set<std::set<int>>;

inline Partition canonical(const std::vector<std::vector<int>>& blocks) {
  Partition p;
  for (const auto& b : blocks) p.insert(std::set<int>(b.begin(), b.end()));
  return p;
}

// Finest partition whose blocks are pairwise farther apart than mu, by enumerating restricted growth strings.
inline Partition finest_separated_partition(const std::vector<cplx>& v, double mu) {
  const int n = static_cast<int>(v.size());
  std::vector<int> label(n, 0);
  Partition best;
  int best_blocks = 0;
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (label[a] != label[b] && std::abs(v[a] - v[b]) <= mu) return;
      if (used > best_blocks) {
        std::vector<std::vector<int>> blocks(used);
        for (int a = 0; a < n; ++a) blocks[label[a]].push_back(a);
        best = canonical(blocks);
        best_blocks = used;
      }
      return;
    }
    for (int c = 0; c <= used && c < n; ++c) {
      label[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

// |A Y - Y(.+alpha) A - H| over the retained modes, relative to |H|, by direct substitution.
inline double substitution_residual(const Mat& A, const TorusMatrix& Y, const TorusMatrix& H, const Frequency& w,
                                    const Sector& s) {
  const TorusMatrix lhs = Y.left(A) - Y.shifted(w).right(A);
  const TorusMatrix diff = project(lhs - H, s);
  return norm_h(diff, 0.0) / std::max(norm_h(project(H, s), 0.0), 1e-300);
}

}  // namespace qpkam::oracle
