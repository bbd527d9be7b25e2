#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qpkam/cocycle.hpp"
#include "qpkam/homological.hpp"
#include "qpkam/resonance.hpp"
#include "qpkam/schedule.hpp"
#include "qpkam/spectral.hpp"

namespace qpkam {

// One factor of the accumulated conjugation, known by its values at Chebyshev nodes of [a,b].
struct ChainFactor {
  enum class Kind { exp, phase, constant };
  Kind kind = Kind::constant;
  double a = 0.0, b = 1.0;
  std::vector<TorusMatrix> Y;     // exp: e^{Y(theta)} at the nodes
  std::vector<Mat> S;             // constant: one value means independent of lambda
  std::vector<MultiIndex> kappa;  // phase: diag(e^{2 pi i <kappa_i, theta>} Id_{sizes_i})
  std::vector<int> sizes;

  Mat eval(const std::vector<double>& theta, double lambda) const;
};
using Chain = std::vector<std::shared_ptr<const ChainFactor>>;

Mat chain_eval(const Chain& c, std::size_t len, const std::vector<double>& theta, double lambda);

struct StageSnapshot {
  int n = 1;
  double h = 0.0;
  double eps = 0.0;  // max over nodes of |F_n|_{h_n}
  std::shared_ptr<const MatFamily> A;
  std::shared_ptr<const ChebFamily<TorusMatrix>> F;
  std::size_t chain_len = 0;
  std::vector<int> sizes;
};

struct StepRecord {
  int n = 0;
  char kase = '-';  // a, b, c, or 0 when F = 0
  double a = 0.0, b = 0.0;
  double eps_in = 0.0, eps_out = 0.0;
  double K_inv = 0.0;
  int N = 0, N_retained = 0, p = 0;
  int clusters_before = 0, clusters_after = 0;
  int inner_iters = 0;
  double min_divisor = 0.0;
  bool structure_verified = true, preconditions_ok = true;
  double y_norm = 0.0, dA = 0.0, fre_norm = 0.0, tail_norm = 0.0, s_minus_id = 0.0;
  bool contracts_ok = true;
  double residual = 0.0;  // largest sampled conjugacy residual ratio after the step
  std::vector<std::string> notes;
};
json to_json(const StepRecord& r);

struct KamCell {
  double a = 0.0, b = 1.0;
  int depth = 0;
  int stage = 1;
  std::vector<double> nodes;
  std::vector<Mat> A;          // block diagonal at the nodes
  std::vector<TorusMatrix> F;  // at the nodes
  std::vector<int> sizes;
  Chain chain;
  std::vector<StageSnapshot> snapshots;  // index s holds stage s+1
  std::vector<StepRecord> records;
  bool excluded = false;
  std::string exclusion_reason;
  TransverseCert cert;
  double min_cross = 0.0;  // cross-cluster distance of the initial decomposition

  int degree() const { return static_cast<int>(nodes.size()) - 1; }
  int mid() const { return degree() / 2; }
  double lambda0() const { return nodes[mid()]; }
  MatFamily A_family() const { return MatFamily(a, b, A); }
  ChebFamily<TorusMatrix> F_family() const { return ChebFamily<TorusMatrix>(a, b, F); }
  bool contains(double x) const { return x >= a && x <= b; }
  // Same state re-interpolated on [a2,b2].
  KamCell restricted(double a2, double b2) const;
};

struct KamOptions {
  KamSchedule schedule;
  int degree = 16;
  int max_depth = 9;
  int max_inner = 50;
  double nu_prime = 0.02;
  PartitionOptions partition;
  bool parallel = true;
  double noise_rel = 1e-13;  // grid coefficients below this fraction of the largest are dropped
  int residual_samples = 4;
  unsigned seed = 1;
};

// Appends the stage snapshot of the current state.
void push_snapshot(KamCell& c, const KamSchedule& s);

enum class StepOutcome { advanced, split, excluded };

// Blocks of the initial partition conjugated by the decomposing S; stage 1.
std::vector<KamCell> initial_cells(const CocycleFamily& fam, double a, double b, const TransverseCert& cert,
                                   const KamOptions& opt);

struct Elimination {
  TorusMatrix Y, Y_lo;
  Mat A_new;
  TorusMatrix f_re;      // single resonant mode per same-group pair
  TorusMatrix residual;  // everything else
  int iterations = 0;
  double retained_norm = 0.0;  // |P G|_h after the last sweep
};

// e^{-Y(.+alpha)} (A + F) e^{Y} = A_new + f_re + residual with P(residual) small.
Elimination eliminate_nonresonant(const Mat& A, const TorusMatrix& F, const Sector& s, const Frequency& freq,
                                  double h, double tol, int max_inner, double noise_rel = 1e-13,
                                  bool parallel = true);

struct PhaseRemoval {
  Mat A_pp;
  TorusMatrix F;
};
// H = diag(e^{2 pi i <kappa_i, theta>}); returns H^{-1}(.+alpha)(A' + f_re + F)H with f_re folded into A''.
PhaseRemoval remove_resonances(const Mat& A_new, const TorusMatrix& f_re, const TorusMatrix& F,
                               const std::vector<int>& sizes, const std::vector<MultiIndex>& kappa,
                               const Frequency& freq);
TorusMatrix phase_conjugate(const TorusMatrix& F, const std::vector<int>& sizes, const std::vector<MultiIndex>& kappa,
                            const Frequency& freq);
Mat phase_matrix(const std::vector<int>& sizes, const std::vector<MultiIndex>& kappa,
                 const std::vector<double>& theta);

struct ConstantDiagonalization {
  Mat S, S_inv;
  Mat A_tilde;  // block diagonal
  double off_norm = 0.0;
  int iterations = 0;
};
// Constant S with S^{-1} A S block diagonal for the given sizes; blocks must have separated spectra.
ConstantDiagonalization diagonalize_constant(const Mat& A, const std::vector<int>& sizes, int max_iter = 40);

StepOutcome kam_step(KamCell& cell, const CocycleFamily& fam, const KamOptions& opt,
                     std::vector<KamCell>* children);

// Ratio |B^{-1}(theta+alpha)(A+F)(theta)B(theta) - (A_n+F_n)(theta)| / ((1+|B|^2)|A+F|) at stage index s.
double conjugacy_residual(const KamCell& c, const CocycleFamily& fam, int s, const std::vector<double>& theta,
                          double lambda);

// |F_n(lambda)|_{h_n} for stage index s.
double stage_norm(const KamCell& c, int s, double lambda);

struct KamRun {
  std::vector<KamCell> cells;
  TransverseCert cert;  // multiset certificate of the constant family
  int steps = 0;
  json manifest;
};

KamRun run_kam(const CocycleFamily& fam, double a, double b, const TransverseCert& cert, int steps,
               const KamOptions& opt);

const KamCell* find_cell(const std::vector<KamCell>& cells, double lambda);

}  // namespace qpkam
