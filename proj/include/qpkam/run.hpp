#pragma once

#include <string>
#include <vector>

#include "qpkam/duality.hpp"
#include "qpkam/schedule.hpp"

namespace qpkam {

inline constexpr const char* kSchemaVersion = "1.0";

enum class Command { reduce, ids, lyapunov, thouless, transversality, resonances, full_pipeline };

Command command_from(const std::string& s);
const char* command_name(Command c);

struct RunConfig {
  Command command = Command::reduce;
  std::string frequency_name;  // empty when given as a vector
  std::vector<double> alpha;
  int diophantine_k = 2000;
  TrigPotential V = TrigPotential::cosine();
  TorusMatrix W = cosine_W(1);
  double eps = 1e-6;

  double E_min = -3.0, E_max = 3.0;
  int E_points = 20;

  ScheduleMode mode = ScheduleMode::practical;
  int stages = 4;
  double nu_prime = 0.05;
  double C_d = 1.0;
  int kam_degree = 16;
  double contraction_exponent = 1.3;
  int residual_samples = 64;
  double residual_tol = 1e-8;

  int fm_stages = 0;  // full-measure stages after the KAM run, 0 disables
  int fm_samples = 200;
  double simple_fraction = 0.95;

  int n_trunc = 400;
  int phases = 4;
  Boundary boundary = Boundary::dirichlet;
  int ids_points = 2001;

  long lyap_n = 10000;
  int lyap_phases = 8;
  double pairing_tol = 0.05;
  double thouless_tol = 1e-2;

  int resonance_N = 20;
  double resonance_sigma = 1e-2;
  double cluster_mu = 1e-3;

  double cert_margin = 0.5;  // transversality domain is the E range widened by this
  unsigned seed = 1;
  int jobs = 0;  // 0 keeps the OpenMP default
  std::string out = "out";
};

// Validates against the config schema; throws Error(Schema) on unknown keys or bad values.
RunConfig parse_config(const json& j);
json to_json(const RunConfig& c);

struct Assertion {
  std::string name;
  bool pass = true;
  double value = 0.0, bound = 0.0;
  json witness;
};

struct RunResult {
  int exit_code = 0;
  json manifest;
  std::vector<Assertion> assertions;
};

// Executes the configured command, writes manifest.json and CSV files under cfg.out.
// Schema and Diophantine errors give exit 2, failed assertions and runtime errors exit 1.
RunResult run(const RunConfig& cfg);

}  // namespace qpkam
