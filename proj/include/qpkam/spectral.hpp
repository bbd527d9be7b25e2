#pragma once

#include <functional>
#include <vector>

#include "qpkam/transversality.hpp"

namespace qpkam {

// Partition of an eigenvalue multiset into clusters.
struct Decomposition {
  std::vector<cplx> values;
  std::vector<std::vector<int>> clusters;  // indices into values
  double nu = 0.0;                         // cross-cluster distance lower bound
  double zeta = 0.0;                       // cluster diameter upper bound

  int size() const { return static_cast<int>(clusters.size()); }
  std::vector<cplx> cluster_values(int i) const;
  std::vector<int> sizes() const;
};

json to_json(const Decomposition& d);

// Single-linkage clustering at threshold mu; clusters ordered by their first value (real, then imaginary part).
Decomposition maximal_separated_decomposition(const std::vector<cplx>& values, double mu);

double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b);
double set_distance(const std::vector<cplx>& a, const std::vector<cplx>& b);
double diameter(const std::vector<cplx>& a);

// Assigns each value to the reference cluster within distance nu; -1 when none or more than one match.
std::vector<int> assign_to_clusters(const std::vector<cplx>& values, const std::vector<std::vector<cplx>>& ref,
                                    double nu);

// Ordered Schur + block Sylvester: A S = S diag(D_1..D_l), eigenvalues of D_i are those labelled i.
struct BlockSplit {
  Mat S;
  std::vector<Mat> blocks;
  std::vector<int> sizes;
};
BlockSplit block_split(const Mat& A, const std::function<int(cplx)>& label, int l);

Mat block_diag(const std::vector<Mat>& blocks);
std::vector<Mat> diag_blocks(const Mat& A, const std::vector<int>& sizes);
double off_block_norm(const Mat& A, const std::vector<int>& sizes);

struct BlockConjugation {
  std::vector<double> nodes;
  double a = 0.0, b = 1.0;
  std::vector<Mat> S;                    // S(lambda) at the nodes
  std::vector<std::vector<Mat>> blocks;  // A_ii(lambda) at the nodes
  std::vector<int> sizes;
  double residual = 0.0;  // max over nodes of |S^{-1} A S - diag| / |A|
  double norm_S = 0.0, norm_Sinv = 0.0, norm_blocks = 0.0;
  double log_ceiling = 0.0;  // ln of b'(|A|/nu)^{m^2(m+2)}
  bool ceiling_exceeded = false;

  MatFamily S_family() const { return MatFamily(a, b, S); }
};

// Projector route on [a,b]: clusters are the reference sets at lambda0 widened by nu_prime.
BlockConjugation block_diagonalize(const std::function<Mat(double)>& A, double a, double b, int degree,
                                   const std::vector<std::vector<cplx>>& ref, double nu_prime, double nu);

// ln of the warn ceiling b'(|A|/nu)^{m^2(m+2)} with b' = (120m)^{m^2+4m}.
double similarity_log_ceiling(int m, double normA, double nu);

struct DecomposedCell {
  double a = 0.0, b = 0.0, lambda0 = 0.0;
  Decomposition at_lambda0;
  std::vector<std::vector<cplx>> ref;
  BlockConjugation conj;
  TransverseCert cert;
  double min_cross = 0.0;  // smallest cross-cluster distance seen at the nodes
  double max_dh = 0.0;     // largest d_H(Sigma_i(lambda), Sigma_i(lambda0)) seen
  int depth = 0;
};

struct PartitionOptions {
  double base_width = 0.125;
  int degree = 16;
  int max_bisections = 8;
  int check_samples = 9;  // extra equispaced checks per cell besides the nodes
};

// ln delta' = -ln b' + 3m ln(nu' / (R^2 M)) + ln delta.
double partition_log_width(int m, double R, double Mtilde, double nu_prime, double delta);

std::vector<DecomposedCell> partition_and_decompose(const std::function<Mat(double)>& A, double a, double b,
                                                    const TransverseCert& cert, double nu_prime, double R,
                                                    const PartitionOptions& opt = {});

json to_json(const DecomposedCell& c);

struct StabilityReport {
  bool pass = true;
  std::vector<double> dh;  // per cluster, max over samples
  double dh_bound = 0.0;
  double R_new = 0.0;
  double nu_new = 0.0, zeta_new = 0.0;
  double c_new_log = 0.0;
  bool c_new_positive = true;
  double g_diff = 0.0, g_diff_bound = 0.0;
  std::vector<std::string> failures;
};

// Checks the perturbation conclusions for block-diagonal A, A' sampled at the same points.
StabilityReport decomposition_stability(const std::vector<std::vector<Mat>>& A,
                                        const std::vector<std::vector<Mat>>& Ap, double eps, double R, double Mtilde,
                                        double nu, double zeta, const TransverseCert& cert, int u_samples = 16);

}  // namespace qpkam
