#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qpkam/frequency.hpp"
#include "qpkam/spectral.hpp"

namespace qpkam {

// sigma_a ~ e^{2 pi i <k,alpha>} sigma_b with sigma_a in cluster i, sigma_b in cluster j.
struct ResonancePair {
  int i = 0, j = 0;
  MultiIndex k;
  double defect = 0.0;
  bool unique = true;  // no other k below the threshold
};

json to_json(const ResonancePair& p);

inline constexpr long kResonanceBudget = 200'000'000;

// min over sigma in a, tau in b of |sigma - e^{2 pi i <k,alpha>} tau|.
double resonance_defect(const std::vector<cplx>& a, const std::vector<cplx>& b, const Frequency& freq,
                        const MultiIndex& k);

// Minimising k over |k| <= N (k = 0 skipped when skip_zero) and its defect.
std::pair<MultiIndex, double> min_resonance(const std::vector<cplx>& a, const std::vector<cplx>& b,
                                            const Frequency& freq, int N, bool skip_zero);
std::pair<MultiIndex, double> min_resonance_serial(const std::vector<cplx>& a, const std::vector<cplx>& b,
                                                   const Frequency& freq, int N, bool skip_zero);

// Number of k with |k| <= N and defect < sigma.
int count_resonant_modes(const std::vector<cplx>& a, const std::vector<cplx>& b, const Frequency& freq, int N,
                         double sigma, bool skip_zero);

// All pairs i < j of clusters that are (N, sigma)-resonant.
std::vector<ResonancePair> find_resonances(const Decomposition& dec, const Frequency& freq, int N, double sigma,
                                           long budget = kResonanceBudget);

struct ResonanceStructure {
  std::vector<std::vector<int>> groups;  // sorted, ordered by smallest member
  std::vector<int> group_of;
  std::vector<MultiIndex> kappa;         // k_{i,n(i)}, n(i) = smallest index in the group of i
  int N = 0, N_prime = 0;
  double K_inv = 0.0;
  int p = 0;
  std::vector<int> ell;  // component counts at N_0..N_l
  bool preconditions_ok = true;
  bool verified = true;
  std::vector<std::string> failures;

  int size() const { return static_cast<int>(group_of.size()); }
  bool trivial() const { return groups.size() == group_of.size(); }
  MultiIndex k(int i, int j) const { return sub(kappa[i], kappa[j]); }
  bool same_group(int i, int j) const { return group_of[i] == group_of[j]; }
};

json to_json(const ResonanceStructure& s);

// (L, eta)-connected components; returns group index per cluster.
std::vector<int> resonant_components(const Decomposition& dec, const Frequency& freq, int L, double eta,
                                     std::vector<std::vector<int>>* groups = nullptr);

// Checks conditions (a)-(d) for one decomposition whose clusters are aligned with the structure.
std::vector<std::string> verify_structure(const ResonanceStructure& s, const Decomposition& dec,
                                          const Frequency& freq, int m);

struct StructureOptions {
  int m = 2;
  double R = 2.0;
  double nu_prime = 0.0;
  bool strict = false;  // precondition or verification failure throws
};

// Components at lambda0 for N_seq[0..], first p with ell_p = ell_{p+1}; checks samples.
ResonanceStructure resonance_structure(const Decomposition& at_lambda0, const std::vector<Decomposition>& samples,
                                       const Frequency& freq, const std::vector<int>& N_seq, double K_inv,
                                       const StructureOptions& opt);

}  // namespace qpkam
