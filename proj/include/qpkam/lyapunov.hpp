#pragma once

#include <functional>

#include "qpkam/cocycle.hpp"

namespace qpkam {

struct LyapunovOptions {
  long n = 10000;
  int theta_samples = 16;
  long burn_in = 0;
  unsigned seed = 0;  // 0 selects the deterministic Kronecker phases
};

// Exponents sorted in decreasing order, averaged over sampled phases.
std::vector<double> lyapunov_exponents(const Cocycle& c, const LyapunovOptions& opt = {});
std::vector<double> lyapunov_exponents_serial(const Cocycle& c, const LyapunovOptions& opt = {});

// Growth of the leading k-volume, k = number of positive exponents.
double fibred_entropy(const Cocycle& c, const LyapunovOptions& opt = {}, double positive_tol = 1e-9);

std::vector<std::vector<double>> sample_phases(int d, int count, unsigned seed);

}  // namespace qpkam
