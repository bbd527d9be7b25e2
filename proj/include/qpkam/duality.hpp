#pragma once

#include <string>
#include <vector>

#include "qpkam/cocycle.hpp"
#include "qpkam/lyapunov.hpp"
#include "qpkam/transversality.hpp"

namespace qpkam {

// V(x) = sum_{|k|<=ell} V_k e^{2 pi i k x}, real valued.
struct TrigPotential {
  std::vector<cplx> V_hat;  // V_hat[k + ell]
  int ell = 1;

  cplx coef(int k) const { return std::abs(k) > ell ? cplx(0.0) : V_hat[k + ell]; }
  double eval(double x) const;
  void validate() const;  // reality symmetry and V_ell != 0
  // 2 amp cos(2 pi x)
  static TrigPotential cosine(double amp = 1.0);
  static TrigPotential from(std::vector<cplx> V_hat);
};
json to_json(const TrigPotential& V);

// Scalar W on T^d with W_{+-e_1} = amp.
TorusMatrix cosine_W(int d, double amp = 1.0);

// Constant part A(E) of the companion matrix.
Mat companion_matrix(const TrigPotential& V, cplx E);
// (alpha, A(E) + F) with the single entry F_{0,ell-1} = -eps W / V_ell.
Cocycle companion_cocycle(const TrigPotential& V, const TorusMatrix& W, double eps, cplx E, const Frequency& freq);
CocycleFamily companion_family(const TrigPotential& V, const TorusMatrix& W, double eps, const Frequency& freq);

enum class OperatorKind { dual_1d, primal };
enum class Boundary { dirichlet, periodic };
const char* boundary_name(Boundary b);
Boundary boundary_from(const std::string& s);

// dual_1d: (Lu)_n = sum_k V_k u_{n-k} + eps W(theta + n alpha) u_n on Z.
// primal:  (Lu)_n = sum_k W_k u_{n-k} + eps^{-1} V(x + <n,alpha>) u_n on Z^d.
struct LongRangeOperator {
  OperatorKind kind = OperatorKind::dual_1d;
  TrigPotential V;
  TorusMatrix W;
  double eps = 0.0;
  Frequency freq;
};

// Hermitian truncation at one phase: length n for d = 1, box side n otherwise (primal).
// Periodic boundary (d = 1) replaces alpha by its best convergent p/q <= n and uses q sites.
Mat truncation(const LongRangeOperator& op, int n, Boundary bc, const std::vector<double>& phase);
std::vector<double> truncation_eigenvalues(const LongRangeOperator& op, int n, Boundary bc,
                                           const std::vector<double>& phase);

struct IdsCurve {
  std::vector<double> E_grid;
  std::vector<double> N_values;
  int truncation_size = 0;
  Boundary boundary = Boundary::dirichlet;
  std::vector<double> eigenvalues;  // sorted, pooled over phases, each of mass 1/size

  double count(double E) const;  // fraction of eigenvalues <= E
};
json to_json(const IdsCurve& c, bool with_eigenvalues = false);

IdsCurve ids(const LongRangeOperator& op, const std::vector<double>& E_grid, int n_trunc, int phase_samples,
             Boundary bc = Boundary::dirichlet, bool parallel = true);

// 1 - arccos(E/2)/pi on [-2,2].
double free_ids(double E);

// int ln|E - E'| dN(E'), eigenvalue mass spread over midpoint cells.
double log_potential(const IdsCurve& c, double E);

struct ThoulessResult {
  std::vector<double> E, gamma, potential, residual;
  double max_abs() const;
};
// gamma(E) - [int ln|E - E'| dN(E') - ln|V_ell|].
ThoulessResult thouless_check(const IdsCurve& c, const TrigPotential& V, const TorusMatrix& W, double eps,
                              const Frequency& freq, const std::vector<double>& E_grid,
                              const LyapunovOptions& lyap = {});

// Exact for constant cocycles; otherwise estimated by iteration.
double fibred_entropy_of(const Cocycle& c, const LyapunovOptions& lyap);

struct DualityComparison {
  IdsCurve dual, primal;  // primal sampled at E / eps
  double sup_diff = 0.0;
};
// N of the primal at energy E/eps against N of the dual at E.
DualityComparison duality_check(const TrigPotential& V, const TorusMatrix& W, double eps, const Frequency& freq,
                                const std::vector<double>& E_grid, int n_trunc, int phase_samples,
                                Boundary bc = Boundary::dirichlet);

struct HolderResult {
  double exponent = 0.0;
  double threshold = 0.0;  // 1/(2 ell) - 1/(4 ell)
  bool pass = false;
  std::vector<double> scales, oscillation;
};
HolderResult holder_estimate(const IdsCurve& c, int ell);

// Reducible energy with conjugation norms.
struct ReducibleSample {
  double E = 0.0;
  double norm_B = 1.0, norm_B_inv = 1.0, norm_D_inv = 1.0;
};
struct LipschitzReport {
  double E = 0.0;
  double C = 0.0, C_tilde = 0.0;
  std::vector<double> eps_imag, increment, increment_bound, ids_increment;
  double lipschitz = 0.0;
  double lipschitz_bound = 0.0;  // 4 ell C_tilde / ln 2
  bool chain_ok = true;
  std::vector<std::string> notes;
};
json to_json(const LipschitzReport& r);
std::vector<LipschitzReport> lipschitz_diagnostic(const TrigPotential& V, const TorusMatrix& W, double eps,
                                                  const Frequency& freq, const IdsCurve& c,
                                                  const std::vector<ReducibleSample>& samples,
                                                  const std::vector<double>& eps_imag,
                                                  const LyapunovOptions& lyap = {}, double tol = 2e-3);

struct FiniteRootCheck {
  double u = 0.0;
  bool twisted = true;  // false: f and f'
  int degree = 0;       // numerical degree in E of the resultant
  double max_abs = 0.0;
  bool nonzero = false;
};
struct NondegeneracyReport {
  TransverseCert cert;
  EmpiricalTransversality fit;
  std::vector<FiniteRootCheck> finite;
  bool finite_ok = true;
};
json to_json(const NondegeneracyReport& r);
// Empirical (c, r) for A(E) on [a,b] plus the finite-root checks of f_E.
NondegeneracyReport nondegeneracy_certify(const TrigPotential& V, double a, double b, double delta = 0.5,
                                          int r_max = 4, int u_samples = 64, int lambda_samples = 256);
// Same for any family; throws InvalidCertificate when no r <= r_max works.
TransverseCert certify_family(const MatFamily& A, double a, double b, double delta, int r_max, int u_samples,
                              int lambda_samples, EmpiricalTransversality* fit = nullptr);

}  // namespace qpkam
