#pragma once

#include <vector>

#include "qpkam/transversality.hpp"

namespace qpkam {

// sum_i |I_i|^rho
double rho_sum(const std::vector<Interval>& v, double rho);

// Parts of v lying outside every interval of cut. Both lists sorted and disjoint.
std::vector<Interval> subtract_intervals(const std::vector<Interval>& v, const std::vector<Interval>& cut);
std::vector<Interval> intersect_intervals(const std::vector<Interval>& v, const std::vector<Interval>& w);
double total_length(const std::vector<Interval>& v);

struct ExclusionStage {
  int j = 1;
  double eps_tilde = 0.0;
  double K_inv = 0.0;
  int N_tilde = 0;
  int r = 1;
  std::vector<Interval> raw;        // every interval returned by the small-value exclusion
  std::vector<Interval> intervals;  // merged and clipped to the surviving set of the stage
  double length_bound = 0.0;        // eps_tilde^{2/(25 r^2)}
  double count_bound = 0.0;         // 2^{r+d} N^d (8 C/c |Lambda| + #components)
  double C_over_c = 0.0;
  double surviving_before = 0.0;
  int components_before = 0;
  int calls = 0, grid_fallbacks = 0;

  double max_raw_length() const;
  bool length_ok() const { return max_raw_length() < length_bound; }
  bool count_ok() const { return static_cast<double>(raw.size()) <= count_bound; }
  double rho(double r) const { return rho_sum(intervals, r); }
};

struct ExclusionSet {
  double a = 0.0, b = 0.0;
  std::vector<Interval> prior;  // removed before the first stage
  std::vector<ExclusionStage> stages;

  std::vector<Interval> all() const;
  double excluded_length() const { return total_length(all()); }
  double rho_sum(double rho) const;
  std::vector<double> stage_rho(double rho) const;
};

json to_json(const Interval& i);
json to_json(const ExclusionStage& s, const std::vector<double>& rhos);
json to_json(const ExclusionSet& s, const std::vector<double>& rhos);

}  // namespace qpkam
