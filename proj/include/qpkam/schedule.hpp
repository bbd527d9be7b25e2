#pragma once

#include <string>
#include <vector>

#include "qpkam/common.hpp"

namespace qpkam {

enum class ScheduleMode { paper, practical };
ScheduleMode schedule_mode_from(const std::string& s);
const char* schedule_mode_name(ScheduleMode m);

// Iteration parameters. Quantities that overflow doubles are kept as natural logs.
struct KamSchedule {
  ScheduleMode mode = ScheduleMode::practical;
  int m = 2, d = 1;
  double R = 2.0;  // 2 R_1
  double gamma = 0.38, tau = 1.0;
  double h1 = 0.1;
  double ln_eps = std::log(1e-6);  // coupling; eps_1 = eps^{1/2} in paper mode
  double kappa_prac = 1.5;
  double C_d = 1.0;
  int N_cap = 64;

  double ln_eps_n(int n) const;  // paper: eps_1^{2^{n^2-n}}; practical: eps_1^{kappa^{n-1}}
  double h(int n) const { return (0.5 + std::ldexp(1.0, -n)) * h1; }
  double ln_N(int n) const;      // [2^{n+1} |ln eps_n| / (2 pi h_1)] + 1
  double ln_a(int n) const { return (n + 1) * std::log(8.0) + std::log(double(m)); }
  double ln_Np(int n, int p) const { return p * ln_a(n) + ln_N(n); }
  double ln_K(int n, double R_n) const;  // 144 m R gamma^{-1} (3 m N_{n,m+1})^tau
  double ln_u(int n) const;              // b_1^{-1} (4 pi h_1 / |ln eps|)^tau e^{-b_2 e^{4 sqrt n}}
  double ln_b1() const;
  double b2() const { return (6.0 * m + 7.0) * tau; }
  double ln_d1() const { return std::log(160.0) + (m + 1) * std::log(double(m)); }

  // s_1 = 1, s_{i+1} = min{n : K_n^{-1} < d_1 u_{s_i}}, up to n_max.
  std::vector<int> s_sequence(int n_max) const;
};

json to_json(const KamSchedule& s);

// Paper smallness conditions for stage n with the current constants; empty when all hold.
struct StageConstants {
  double lnR = 0, lnM = 0, lnDelta = 0, lnC = 0, lnNu = 0;
  int r = 1;
};
std::vector<std::string> paper_stage_conditions(const KamSchedule& s, int n, double ln_eps_measured,
                                                const StageConstants& c, double ln_b);

struct ConstantSeeds {
  double R1 = 1.0, M1 = 6.0, delta1 = 0.1, c1 = 0.5, nu1 = 0.1;
  int r1 = 1;
  double ln_b = 0.0;       // paper: ln max{(120m)^{8m^3}, b'}
  double kappa = 2.0;      // paper: m^{2m^2+10}
  // Closed-form exponents; fitted, the paper leaves them implicit.
  double b3 = 4.0, b4 = 4.0, b5 = 2.0, b6 = 1.0;

  static ConstantSeeds paper(int m);
  static ConstantSeeds practical();
};

struct ConstantRow {
  int n = 1;
  char kase = '-';  // 'a' before s_k, 'b' plain, 'c' theta event
  StageConstants c;
  double ln_M_ceiling = 0, ln_delta_floor = 0, ln_c_floor = 0;
  bool ok = true;
  std::string violation;
};

struct ConstantTable {
  std::vector<ConstantRow> rows;
  int first_bad = -1;
  std::string reason;
};
json to_json(const ConstantTable& t);

// Recursions for R_n, M_n, delta_n, c_n, nu_n, r_n with the closed-form ceilings and floors, in logs.
ConstantTable schedule_constants(const KamSchedule& s, const ConstantSeeds& seeds, const std::vector<int>& theta_events,
                                 int n_max);

}  // namespace qpkam
