#pragma once

#include <string>
#include <vector>

#include "qpkam/exclusion_set.hpp"
#include "qpkam/kam.hpp"

namespace qpkam {

struct FullMeasureOptions {
  int start_stage = 2;  // KAM snapshot the phase starts from
  int stages = 4;
  double kappa = 1.5;   // eps_{j+1} = eps_j^kappa
  int r_tilde = 0;      // 0: r of the run certificate
  int N_cap = 256;
  int g_degree = 48;
  int pyartli_samples = 512;
  int prefilter_samples = 129;
  int theta_samples = 32;
  std::vector<double> rhos{1.0, 0.5, 0.25, 0.1};
  bool parallel = true;
};

struct FullStageRecord {
  int j = 1;
  int n = 0;  // KAM stage index of the incoming state
  double eps_tilde = 0.0, eps_next = 0.0;
  double measured_in = 0.0, measured_out = 0.0;
  double K_inv = 0.0;
  int N_tilde = 0;
  int cells_in = 0, cells_out = 0;
  double min_divisor = 0.0;
  double residual = 0.0;
  int inner_iters = 0;
  bool contraction_ok = true;
  std::vector<std::string> notes;
};
json to_json(const FullStageRecord& r);

struct ReducedSample {
  double lambda = 0.0;
  bool excluded = false;
  double gap = 0.0, floor = 0.0;
  bool simple = false;
  double norm_B = 0.0, norm_B_inv = 0.0, norm_D_inv = 0.0;
  double F_final = 0.0;
  Mat A_tilde;
};
json to_json(const ReducedSample& s);

struct ReducibilityReport {
  int start_stage = 2;
  int r_tilde = 1;
  int m = 0;
  double eps1 = 0.0;
  double gap_floor = 0.0;  // eps1^{1/(5 m^2 r)}
  std::vector<FullStageRecord> stages;
  std::vector<ReducedSample> samples;
  int surviving = 0, simple = 0;
  bool contraction_ok = true;

  double simple_fraction() const { return surviving ? static_cast<double>(simple) / surviving : 0.0; }
};
json to_json(const ReducibilityReport& r);

struct FullMeasure {
  ReducibilityReport report;
  ExclusionSet exclusions;
  std::vector<KamCell> cells;
};
json to_json(const FullMeasure& f, const std::vector<double>& rhos);

// Cells of a KAM run rewound to the given stage, one block per cell.
std::vector<KamCell> rewind_cells(const KamRun& run, int stage);

// Alternates small-value exclusion of g(lambda, <k,alpha>) at K_j^{-1} with elimination of every k != 0 mode
// on the surviving cells; samples are evaluated at the end.
FullMeasure reduce_full_measure(const KamRun& run, const CocycleFamily& fam, const KamOptions& kam,
                                const std::vector<double>& samples, const FullMeasureOptions& opt = {});

}  // namespace qpkam
