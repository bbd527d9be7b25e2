#include "qpkam/exclusion_set.hpp"

#include <algorithm>
#include <sstream>

namespace qpkam {

double rho_sum(const std::vector<Interval>& v, double rho) {
  double s = 0.0;
  for (const auto& I : v)
    if (I.length() > 0) s += std::pow(I.length(), rho);
  return s;
}

double total_length(const std::vector<Interval>& v) {
  double s = 0.0;
  for (const auto& I : merge_intervals(v)) s += I.length();
  return s;
}

std::vector<Interval> subtract_intervals(const std::vector<Interval>& v, const std::vector<Interval>& cut) {
  const auto c = merge_intervals(cut);
  std::vector<Interval> out;
  for (const auto& I : merge_intervals(v)) {
    double lo = I.lo;
    for (const auto& J : c) {
      if (J.hi <= lo) continue;
      if (J.lo >= I.hi) break;
      if (J.lo > lo) out.push_back({lo, J.lo});
      lo = std::max(lo, J.hi);
      if (lo >= I.hi) break;
    }
    if (lo < I.hi) out.push_back({lo, I.hi});
  }
  return out;
}

std::vector<Interval> intersect_intervals(const std::vector<Interval>& v, const std::vector<Interval>& w) {
  const auto x = merge_intervals(v), y = merge_intervals(w);
  std::vector<Interval> out;
  size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double lo = std::max(x[i].lo, y[j].lo), hi = std::min(x[i].hi, y[j].hi);
    if (lo < hi) out.push_back({lo, hi});
    if (x[i].hi < y[j].hi)
      ++i;
    else
      ++j;
  }
  return out;
}

namespace {

std::string rho_key(double r) {
  std::ostringstream o;
  o << r;
  return o.str();
}

}  // namespace

double ExclusionStage::max_raw_length() const {
  double m = 0.0;
  for (const auto& I : raw) m = std::max(m, I.length());
  return m;
}

std::vector<Interval> ExclusionSet::all() const {
  std::vector<Interval> v = prior;
  for (const auto& s : stages) v.insert(v.end(), s.intervals.begin(), s.intervals.end());
  return merge_intervals(v);
}

double ExclusionSet::rho_sum(double rho) const {
  double s = qpkam::rho_sum(prior, rho);
  for (const auto& st : stages) s += st.rho(rho);
  return s;
}

std::vector<double> ExclusionSet::stage_rho(double rho) const {
  std::vector<double> out;
  for (const auto& st : stages) out.push_back(st.rho(rho));
  return out;
}

json to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

json to_json(const ExclusionStage& s, const std::vector<double>& rhos) {
  json j;
  j["j"] = s.j;
  j["eps_tilde_ln"] = std::log(s.eps_tilde);
  j["K_inv"] = s.K_inv;
  j["N_tilde"] = s.N_tilde;
  j["r"] = s.r;
  j["raw_count"] = s.raw.size();
  j["max_raw_length"] = s.max_raw_length();
  j["length_bound"] = s.length_bound;
  j["count_bound"] = s.count_bound;
  j["length_ok"] = s.length_ok();
  j["count_ok"] = s.count_ok();
  j["surviving_before"] = s.surviving_before;
  j["components_before"] = s.components_before;
  j["calls"] = s.calls;
  j["grid_fallbacks"] = s.grid_fallbacks;
  j["excluded_length"] = total_length(s.intervals);
  j["intervals"] = json::array();
  for (const auto& I : s.intervals) j["intervals"].push_back(to_json(I));
  for (double r : rhos) j["rho_sum"][rho_key(r)] = s.rho(r);
  return j;
}

json to_json(const ExclusionSet& s, const std::vector<double>& rhos) {
  json j;
  j["domain"] = {s.a, s.b};
  j["prior"] = json::array();
  for (const auto& I : s.prior) j["prior"].push_back(to_json(I));
  j["stages"] = json::array();
  for (const auto& st : s.stages) j["stages"].push_back(to_json(st, rhos));
  j["excluded_length"] = s.excluded_length();
  for (double r : rhos) j["rho_sum"][rho_key(r)] = s.rho_sum(r);
  return j;
}

}  // namespace qpkam
