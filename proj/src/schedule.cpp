#include "qpkam/schedule.hpp"

#include <algorithm>

namespace qpkam {

ScheduleMode schedule_mode_from(const std::string& s) {
  if (s == "paper" || s == "paper_faithful") return ScheduleMode::paper;
  if (s == "practical") return ScheduleMode::practical;
  throw Error(ErrorKind::Schema, "unknown schedule mode '" + s + "'");
}

const char* schedule_mode_name(ScheduleMode m) { return m == ScheduleMode::paper ? "paper" : "practical"; }

double KamSchedule::ln_eps_n(int n) const {
  if (mode == ScheduleMode::paper) {
    const double e1 = 0.5 * ln_eps;
    return std::ldexp(1.0, n * n - n) * e1;
  }
  return std::pow(kappa_prac, n - 1) * ln_eps;
}

double KamSchedule::ln_N(int n) const {
  const double le = std::abs(ln_eps_n(n));
  const double x = (n + 1) * std::log(2.0) + std::log(le) - std::log(kTwoPi * h1);
  if (x < 600) return std::log(std::floor(std::exp(x)) + 1.0);
  return x;
}

double KamSchedule::ln_K(int n, double R_n) const {
  return std::log(144.0 * m * R_n / gamma) + tau * (std::log(3.0 * m) + ln_Np(n, m + 1));
}

double KamSchedule::ln_b1() const {
  return std::log(160.0) + (m + 2) * (tau + 1) * std::log(double(m)) + (tau + 2) * std::log(12.0) + std::log(R) -
         std::log(gamma);
}

double KamSchedule::ln_u(int n) const {
  return -ln_b1() + tau * (std::log(4 * kPi * h1) - std::log(std::abs(ln_eps))) - b2() * std::exp(4 * std::sqrt(n));
}

std::vector<int> KamSchedule::s_sequence(int n_max) const {
  std::vector<int> s{1};
  while (true) {
    const double target = ln_d1() + ln_u(s.back());
    int next = -1;
    for (int n = s.back() + 1; n <= n_max; ++n)
      if (-ln_K(n, R) < target) {
        next = n;
        break;
      }
    if (next < 0) break;
    s.push_back(next);
  }
  return s;
}

json to_json(const KamSchedule& s) {
  return {{"mode", schedule_mode_name(s.mode)},
          {"m", s.m},
          {"d", s.d},
          {"R", s.R},
          {"gamma", s.gamma},
          {"tau", s.tau},
          {"h1", s.h1},
          {"ln_eps", s.ln_eps},
          {"kappa_prac", s.kappa_prac},
          {"C_d", s.C_d},
          {"N_cap", s.N_cap}};
}

std::vector<std::string> paper_stage_conditions(const KamSchedule& s, int n, double ln_eps_measured,
                                                const StageConstants& c, double ln_b) {
  std::vector<std::string> out;
  const int m = s.m;
  const double R = std::exp(c.lnR);
  const double lnE = s.ln_eps_n(n);
  const double lnK = s.ln_K(n, s.R);
  const double ln3mN = std::log(3.0 * m) + s.ln_Np(n, m + 1);
  if (!(ln_eps_measured < lnE)) out.push_back("|F_n| < eps_n");
  if (!(-lnK < std::log(s.gamma / (144.0 * m * R)) - s.tau * ln3mN)) out.push_back("K_n^{-1} bound");
  const double ln2N = std::log(2.0) + s.ln_Np(n, m + 1);
  if (!(lnE / (2.0 * m) < std::log(s.gamma / (48.0 * R)) - s.tau * ln2N)) out.push_back("eps_n^{1/2m} bound");
  const double lhs = std::log(s.C_d) + (m * m + 1) * (ln_b + c.lnR + c.lnM + lnK - c.lnNu) +
                     s.d * (std::log(3.0) + n * std::log(2.0) + s.ln_Np(n, m + 2) - std::log(s.h1)) +
                     (m * m * c.r / 3.0) * (std::log(2.0 * m * m * c.r) - c.lnDelta) - c.lnC / 3.0;
  if (!(lhs <= -lnE / 6.0)) out.push_back("coupling condition with C(d)");
  return out;
}

ConstantSeeds ConstantSeeds::paper(int m) {
  ConstantSeeds s;
  const double lb = 8.0 * m * m * m * std::log(120.0 * m);
  const double lbp = (m * m + 4.0 * m) * std::log(120.0 * m);
  s.ln_b = std::max(lb, lbp);
  s.kappa = std::pow(double(m), 2.0 * m * m + 10.0);
  return s;
}

ConstantSeeds ConstantSeeds::practical() {
  ConstantSeeds s;
  s.ln_b = std::log(2.0);
  s.kappa = 1.5;
  return s;
}

json to_json(const ConstantTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"n", r.n},
                    {"case", std::string(1, r.kase)},
                    {"ln_R", r.c.lnR},
                    {"ln_M", r.c.lnM},
                    {"ln_delta", r.c.lnDelta},
                    {"ln_c", r.c.lnC},
                    {"ln_nu", r.c.lnNu},
                    {"r", r.c.r},
                    {"ln_M_ceiling", r.ln_M_ceiling},
                    {"ln_delta_floor", r.ln_delta_floor},
                    {"ln_c_floor", r.ln_c_floor},
                    {"ok", r.ok},
                    {"violation", r.violation}});
  return {{"rows", rows}, {"first_bad", t.first_bad}, {"reason", t.reason}};
}

ConstantTable schedule_constants(const KamSchedule& s, const ConstantSeeds& seeds,
                                 const std::vector<int>& theta_events, int n_max) {
  const int m = s.m;
  const double lb = seeds.ln_b, kap = seeds.kappa, lk = std::log(kap);
  const auto sseq = s.s_sequence(n_max + 1);
  auto is_s = [&](int n) { return n > 1 && std::find(sseq.begin(), sseq.end(), n) != sseq.end(); };
  auto in_theta = [&](int n) { return std::find(theta_events.begin(), theta_events.end(), n) != theta_events.end(); };

  const double le1 = s.ln_eps_n(1);
  const double L = std::log(seeds.M1 * std::abs(le1) / (kTwoPi * s.h1));
  const double lc_base = std::log(seeds.c1) + std::log(kTwoPi * s.h1) - std::log(std::abs(le1));

  ConstantTable t;
  StageConstants c{std::log(seeds.R1), std::log(seeds.M1), std::log(seeds.delta1), std::log(seeds.c1),
                   std::log(seeds.nu1), seeds.r1};
  for (int n = 1; n <= n_max; ++n) {
    ConstantRow row;
    row.n = n;
    row.c = c;
    const double ln_n = std::log(double(n));
    row.ln_M_ceiling = seeds.b3 * ln_n * L + seeds.b3 * std::exp(4 * std::sqrt(n));
    row.ln_delta_floor = std::log(seeds.delta1) - seeds.b4 * ln_n * L - seeds.b4 * std::exp(4 * std::sqrt(n));
    row.ln_c_floor = std::pow(double(n), seeds.b5) * lc_base - seeds.b6 * std::exp(5 * std::sqrt(n));
    if (!(c.lnR < std::log(2 * seeds.R1))) row.violation = "R_n >= 2R_1";
    else if (!(c.lnM <= row.ln_M_ceiling)) row.violation = "M_n above ceiling";
    else if (!(c.lnDelta > row.ln_delta_floor)) row.violation = "delta_n below floor";
    else if (!(c.lnC > row.ln_c_floor)) row.violation = "c_n below floor";
    row.ok = row.violation.empty();
    if (!row.ok && t.first_bad < 0) {
      t.first_bad = n;
      t.reason = row.violation;
    }

    // transition n -> n+1
    const double le = s.ln_eps_n(n);
    const double r = c.r;
    StageConstants nx = c;
    nx.lnR = log_add(c.lnR, lb + 2 * c.lnR + 4 * c.lnM + le / m);
    if (is_s(n + 1)) {
      row.kase = 'a';
      nx.r = m * m * c.r;
      nx.lnNu = s.ln_u(n + 1);
      nx.lnDelta = -lb - 6 * m * c.lnR + kap * (nx.lnNu - c.lnM) + c.lnDelta;
      nx.lnM = lb + kap * (c.lnM - nx.lnNu);
      const double lead = std::exp(r * lk) * (-lb - c.lnR - std::log(r) + c.lnDelta + nx.lnNu - c.lnM + c.lnC);
      nx.lnC = log_sub(lead, kap * r * std::log(r) + le);
    } else if (in_theta(n)) {
      row.kase = 'c';
      nx.r = m * m * c.r;
      nx.lnNu = log_sub(c.lnNu, lb + 4 * c.lnM + le / m);
      nx.lnDelta = -lb - (2 * m - 1) * c.lnR + m * c.lnNu + c.lnDelta;
      nx.lnM = log_add(c.lnM, std::log(20.0 * m) + 2 * c.lnM + le);
      const double lead = std::exp(r * lk) * (-lb - c.lnR - std::log(r) + c.lnDelta + c.lnC);
      nx.lnC = log_sub(lead, kap * r * (lb + c.lnR + c.lnM - c.lnDelta + std::log(r)) + le);
    } else {
      row.kase = 'b';
      nx.lnNu = log_sub(c.lnNu, lb + 4 * c.lnM + le / m);
      nx.lnM = log_add(c.lnM, std::log(20.0 * m) + 2 * c.lnM + le);
      nx.lnC = log_sub(c.lnC, lb + 3 * m * m * c.lnR + (m + 2) * c.lnM +
                                  r * (std::log(2.0) - c.lnDelta + std::log(r)) + le);
    }
    t.rows.push_back(row);
    c = nx;
  }
  return t;
}

}  // namespace qpkam
