#pragma once

#include <vector>

#include "qpkam/common.hpp"

namespace qpkam {

using MultiIndex = std::vector<int>;

int l1(const MultiIndex& k);
MultiIndex negate(const MultiIndex& k);
MultiIndex add(const MultiIndex& a, const MultiIndex& b);
MultiIndex sub(const MultiIndex& a, const MultiIndex& b);
bool is_zero(const MultiIndex& k);

// All k in Z^d with |k|_1 <= N, sorted by |k| then lexicographically.
std::vector<MultiIndex> l1_ball(int d, int N);

struct Frequency {
  std::vector<double> alpha;
  double gamma = 0.0;
  double tau = 0.0;
  int k_max_checked = 0;

  int d() const { return static_cast<int>(alpha.size()); }
  double dot(const MultiIndex& k) const;
  cplx phase(const MultiIndex& k) const { return expi2pi(dot(k)); }

  // Fits (gamma, tau): smallest tau on a 0.05 grid above d-1 whose minimiser is stable
  // between |k| <= K/10 and |k| <= K, then gamma = min ||<k,alpha>|| |k|^tau.
  static Frequency certify(std::vector<double> alpha, int k_max = 10000);
};

// Distance to the nearest integer.
inline double dist_z(double x) { return std::abs(x - std::round(x)); }

}  // namespace qpkam
