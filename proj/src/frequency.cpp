#include "qpkam/frequency.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

namespace qpkam {

int l1(const MultiIndex& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

MultiIndex negate(const MultiIndex& k) {
  MultiIndex r(k);
  for (auto& v : r) v = -v;
  return r;
}

MultiIndex add(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

MultiIndex sub(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

bool is_zero(const MultiIndex& k) {
  return std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
}

std::vector<MultiIndex> l1_ball(int d, int N) {
  std::vector<MultiIndex> out;
  MultiIndex k(d, 0);
  std::function<void(int, int)> rec = [&](int axis, int budget) {
    if (axis == d) {
      out.push_back(k);
      return;
    }
    for (int v = -budget; v <= budget; ++v) {
      k[axis] = v;
      rec(axis + 1, budget - std::abs(v));
    }
    k[axis] = 0;
  };
  rec(0, N);
  std::stable_sort(out.begin(), out.end(), [](const MultiIndex& a, const MultiIndex& b) {
    int la = l1(a), lb = l1(b);
    return la != lb ? la < lb : a < b;
  });
  return out;
}

double Frequency::dot(const MultiIndex& k) const {
  double s = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) s += k[i] * alpha[i];
  return s;
}

namespace {

// D[s] = min over |k|_1 = s of ||<k,alpha>||, for s = 1..K. Half of the sphere suffices by symmetry.
std::vector<double> level_minima(const std::vector<double>& alpha, int K) {
  const int d = static_cast<int>(alpha.size());
  std::vector<double> D(K + 1, 1.0);
  if (d == 1) {
    for (int s = 1; s <= K; ++s) D[s] = dist_z(s * alpha[0]);
    return D;
  }
  MultiIndex k(d, 0);
  std::function<void(int, int, double)> rec = [&](int axis, int used, double acc) {
    if (axis == d - 1) {
      for (int sgn : {-1, 1}) {
        for (int v = 0; v + used <= K; ++v) {
          if (sgn < 0 && v == 0) continue;
          int s = used + v;
          if (s == 0) continue;
          double x = acc + sgn * v * alpha[axis];
          double dz = dist_z(x);
          if (dz < D[s]) D[s] = dz;
        }
      }
      return;
    }
    for (int v = -(K - used); v <= K - used; ++v) rec(axis + 1, used + std::abs(v), acc + v * alpha[axis]);
  };
  rec(0, 0, 0.0);
  return D;
}

}  // namespace

Frequency Frequency::certify(std::vector<double> alpha, int k_max) {
  const int d = static_cast<int>(alpha.size());
  if (d < 1) throw Error(ErrorKind::Domain, "frequency needs d >= 1");
  int K = k_max;
  // keep the enumeration near 5e7 lattice points
  while (d > 1 && std::pow(2.0 * K, d) > 5e7) K = static_cast<int>(K * 0.8);
  auto D = level_minima(alpha, K);
  for (int s = 1; s <= K; ++s) {
    if (D[s] < 1e-12) {
      json w;
      w["k_norm"] = s;
      w["distance"] = D[s];
      throw Error(ErrorKind::Diophantine, "frequency is rational or numerically resonant", w);
    }
  }
  auto gamma_of = [&](double tau, int upto) {
    double g = HUGE_VAL;
    for (int s = 1; s <= upto; ++s) g = std::min(g, D[s] * std::pow(double(s), tau));
    return g;
  };
  const int Ksub = std::max(1, K / 10);
  Frequency f;
  f.alpha = std::move(alpha);
  f.k_max_checked = K;
  for (int j = 1; j <= 80; ++j) {
    double tau = (d - 1) + 0.05 * j;
    double gf = gamma_of(tau, K);
    double gs = gamma_of(tau, Ksub);
    if (gf >= 0.95 * gs || j == 80) {
      f.tau = tau;
      f.gamma = gf;
      break;
    }
  }
  return f;
}

}  // namespace qpkam
