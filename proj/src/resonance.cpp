#include "qpkam/resonance.hpp"

#include <algorithm>
#include <numeric>
#include <omp.h>

namespace qpkam {

json to_json(const ResonancePair& p) {
  return {{"i", p.i}, {"j", p.j}, {"k", p.k}, {"defect", p.defect}, {"unique", p.unique}};
}

double resonance_defect(const std::vector<cplx>& a, const std::vector<cplx>& b, const Frequency& freq,
                        const MultiIndex& k) {
  const cplx e = freq.phase(k);
  double best = HUGE_VAL;
  for (cplx s : a)
    for (cplx t : b) best = std::min(best, std::abs(s - e * t));
  return best;
}

std::pair<MultiIndex, double> min_resonance_serial(const std::vector<cplx>& a, const std::vector<cplx>& b,
                                                   const Frequency& freq, int N, bool skip_zero) {
  MultiIndex best_k(freq.d(), 0);
  double best = HUGE_VAL;
  for (const auto& k : l1_ball(freq.d(), N)) {
    if (skip_zero && is_zero(k)) continue;
    double v = resonance_defect(a, b, freq, k);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  return {best_k, best};
}

std::pair<MultiIndex, double> min_resonance(const std::vector<cplx>& a, const std::vector<cplx>& b,
                                            const Frequency& freq, int N, bool skip_zero) {
  const auto ks = l1_ball(freq.d(), N);
  const int n = static_cast<int>(ks.size());
  std::vector<double> v(n, HUGE_VAL);
#pragma omp parallel for schedule(static) if (n > 512)
  for (int t = 0; t < n; ++t)
    if (!(skip_zero && is_zero(ks[t]))) v[t] = resonance_defect(a, b, freq, ks[t]);
  // first minimiser in ball order, same as the serial scan
  int arg = 0;
  for (int t = 1; t < n; ++t)
    if (v[t] < v[arg]) arg = t;
  if (n == 0 || !std::isfinite(v[arg])) return {MultiIndex(freq.d(), 0), HUGE_VAL};
  return {ks[arg], v[arg]};
}

int count_resonant_modes(const std::vector<cplx>& a, const std::vector<cplx>& b, const Frequency& freq, int N,
                         double sigma, bool skip_zero) {
  int c = 0;
  for (const auto& k : l1_ball(freq.d(), N)) {
    if (skip_zero && is_zero(k)) continue;
    if (resonance_defect(a, b, freq, k) < sigma) ++c;
  }
  return c;
}

std::vector<ResonancePair> find_resonances(const Decomposition& dec, const Frequency& freq, int N, double sigma,
                                           long budget) {
  const int l = dec.size();
  long pairs = 0;
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) pairs += long(dec.clusters[i].size()) * long(dec.clusters[j].size());
  const long work = pairs * static_cast<long>(l1_ball(freq.d(), N).size());
  if (work > budget)
    throw Error(ErrorKind::ResonanceBudget, "resonance enumeration exceeds budget",
                {{"work", work}, {"budget", budget}, {"N", N}});
  std::vector<ResonancePair> out;
  for (int i = 0; i < l; ++i) {
    const auto a = dec.cluster_values(i);
    for (int j = i + 1; j < l; ++j) {
      const auto b = dec.cluster_values(j);
      auto [k, v] = min_resonance(a, b, freq, N, false);
      if (!(v < sigma)) continue;
      ResonancePair p{i, j, k, v, true};
      p.unique = count_resonant_modes(a, b, freq, N, sigma, false) == 1;
      out.push_back(p);
    }
  }
  return out;
}

json to_json(const ResonanceStructure& s) {
  json kt = json::array();
  for (int i = 0; i < s.size(); ++i)
    for (int j = 0; j < s.size(); ++j)
      if (i != j && s.same_group(i, j)) kt.push_back({{"i", i}, {"j", j}, {"k", s.k(i, j)}});
  return {{"groups", s.groups},   {"k_ij", kt},         {"kappa", s.kappa},
          {"N", s.N},             {"N_prime", s.N_prime}, {"K_inv", s.K_inv},
          {"p", s.p},             {"ell", s.ell},       {"preconditions_ok", s.preconditions_ok},
          {"verified", s.verified}, {"failures", s.failures}};
}

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<std::vector<int>> groups_from_labels(const std::vector<int>& g) {
  int n = 0;
  for (int x : g) n = std::max(n, x + 1);
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < static_cast<int>(g.size()); ++i) out[g[i]].push_back(i);
  return out;
}

}  // namespace

std::vector<int> resonant_components(const Decomposition& dec, const Frequency& freq, int L, double eta,
                                     std::vector<std::vector<int>>* groups) {
  const int l = dec.size();
  UnionFind uf(l);
  for (const auto& p : find_resonances(dec, freq, L, eta)) uf.unite(p.i, p.j);
  std::vector<int> root(l), label(l, -1);
  int next = 0;
  for (int i = 0; i < l; ++i) {
    int r = uf.find(i);
    if (label[r] < 0) label[r] = next++;
    root[i] = label[r];
  }
  if (groups) *groups = groups_from_labels(root);
  return root;
}

std::vector<std::string> verify_structure(const ResonanceStructure& s, const Decomposition& dec,
                                          const Frequency& freq, int m) {
  std::vector<std::string> fail;
  const int l = dec.size();
  if (l != s.size()) return {"cluster count differs from the structure"};
  const double half = 0.5 * s.K_inv, wide = 2.0 * m * s.K_inv;
  for (int i = 0; i < l; ++i) {
    const auto a = dec.cluster_values(i);
    auto [k, v] = min_resonance(a, a, freq, s.N_prime, true);
    if (v < half) fail.push_back("(a) cluster " + std::to_string(i) + " self-resonant at k=" + json(k).dump());
  }
  for (int i = 0; i < l; ++i) {
    const auto a = dec.cluster_values(i);
    for (int j = 0; j < l; ++j) {
      if (i == j) continue;
      const auto b = dec.cluster_values(j);
      if (s.same_group(i, j)) {
        const MultiIndex kij = s.k(i, j);
        if (l1(kij) > m * s.N) fail.push_back("(b) |k_ij| > mN for " + std::to_string(i) + "," + std::to_string(j));
        if (!(resonance_defect(a, b, freq, kij) < wide))
          fail.push_back("(b) k_ij not resonant for " + std::to_string(i) + "," + std::to_string(j));
        if (i < j && count_resonant_modes(a, b, freq, m * s.N_prime, wide, false) > 1)
          fail.push_back("(b) k_ij not unique for " + std::to_string(i) + "," + std::to_string(j));
        for (int t = 0; t < l; ++t)
          if (t != i && t != j && s.same_group(i, t) && add(s.k(i, j), s.k(j, t)) != s.k(i, t))
            fail.push_back("(c) cocycle identity");
      } else if (i < j) {
        auto [k, v] = min_resonance(a, b, freq, s.N_prime, false);
        if (v < half)
          fail.push_back("(d) groups of " + std::to_string(i) + "," + std::to_string(j) + " resonant at k=" +
                         json(k).dump());
      }
    }
  }
  return fail;
}

ResonanceStructure resonance_structure(const Decomposition& at_lambda0, const std::vector<Decomposition>& samples,
                                       const Frequency& freq, const std::vector<int>& N_seq, double K_inv,
                                       const StructureOptions& opt) {
  if (N_seq.size() < 2) throw Error(ErrorKind::Domain, "resonance_structure needs at least N_0, N_1");
  const int l = at_lambda0.size();
  const int m = opt.m;
  ResonanceStructure s;
  s.K_inv = K_inv;

  const int Nm1 = N_seq[std::min<std::size_t>(m + 1, N_seq.size() - 1)];
  const double rhs = freq.gamma / (10.0 * opt.R * std::pow(3.0 * m * Nm1, freq.tau));
  const double zeta = at_lambda0.zeta;
  if (!(8 * m * opt.nu_prime < 8 * m * zeta || (opt.nu_prime == 0 && zeta == 0)))
    s.failures.push_back("precondition 8m nu' < 8m zeta");
  if (!(8 * zeta < K_inv)) s.failures.push_back("precondition 8m zeta < m/K");
  if (!(m * K_inv < rhs)) s.failures.push_back("precondition m/K < gamma/(10R(3mN_{m+1})^tau)");
  s.preconditions_ok = s.failures.empty();
  if (!s.preconditions_ok && opt.strict)
    throw Error(ErrorKind::Precondition, "resonance structure preconditions fail",
                {{"failures", s.failures}, {"K_inv", K_inv}, {"zeta", zeta}, {"rhs", rhs}});

  // components at (N_i, 1/K); counts are non-increasing in i
  std::vector<std::vector<int>> labels;
  const int imax = std::min<int>(static_cast<int>(N_seq.size()) - 1, std::max(l, 1));
  for (int i = 0; i <= imax; ++i) {
    labels.push_back(resonant_components(at_lambda0, freq, N_seq[i], K_inv));
    int c = 0;
    for (int x : labels.back()) c = std::max(c, x + 1);
    s.ell.push_back(c);
  }
  s.p = static_cast<int>(s.ell.size()) - 1;
  for (int i = 0; i + 1 < static_cast<int>(s.ell.size()); ++i)
    if (s.ell[i] == s.ell[i + 1]) {
      s.p = i;
      break;
    }
  if (s.p == static_cast<int>(s.ell.size()) - 1 && s.p > 0) s.p = s.p - 1;
  s.N = N_seq[s.p];
  s.N_prime = N_seq[s.p + 1];
  s.group_of = labels[s.p];
  s.groups = groups_from_labels(s.group_of);

  // kappa by breadth-first search from the smallest member along minimising resonances
  s.kappa.assign(l, MultiIndex(freq.d(), 0));
  for (const auto& g : s.groups) {
    std::vector<bool> seen(l, false);
    std::vector<int> queue{g.front()};
    seen[g.front()] = true;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int j = queue[q];
      const auto b = at_lambda0.cluster_values(j);
      for (int i : g) {
        if (seen[i]) continue;
        auto [k, v] = min_resonance(at_lambda0.cluster_values(i), b, freq, s.N, false);
        if (v < K_inv) {
          s.kappa[i] = add(k, s.kappa[j]);
          seen[i] = true;
          queue.push_back(i);
        }
      }
    }
  }

  auto fail0 = verify_structure(s, at_lambda0, freq, m);
  std::vector<std::string> fails = fail0;
  for (std::size_t t = 0; t < samples.size(); ++t)
    for (auto& f : verify_structure(s, samples[t], freq, m)) fails.push_back("sample " + std::to_string(t) + ": " + f);
  s.verified = fails.empty();
  for (auto& f : fails) s.failures.push_back(f);
  if (!s.verified && opt.strict)
    throw Error(ErrorKind::ResonanceStructure, "resonance structure verification failed", {{"failures", fails}});
  return s;
}

}  // namespace qpkam
