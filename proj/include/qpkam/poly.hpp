#pragma once

#include <vector>

#include "qpkam/common.hpp"

namespace qpkam {

inline constexpr int kDegreeCap = 64;

// Coefficients a_0 X^n + a_1 X^{n-1} + ... + a_n, leading first.
using Poly = std::vector<cplx>;

int degree(const Poly& p);
double sup_coeff(const Poly& p);
cplx poly_eval(const Poly& p, cplx x);

Poly characteristic_poly(const std::vector<cplx>& roots);
Poly characteristic_poly(const Mat& A);
std::vector<cplx> eigenvalues(const Mat& A);

Mat sylvester_matrix(const Poly& p, const Poly& q);
cplx resultant(const Poly& p, const Poly& q);

// e^{2 pi i m2 u} chi2(e^{-2 pi i u} X): roots rotated by e^{2 pi i u}.
Poly twist(const Poly& chi, double u);
// Res(chi1, chi2; u) = prod (sigma_i - e^{2 pi i u} tau_j) for monic inputs.
cplx resultant_twisted(const Poly& chi1, const Poly& chi2, double u);

// chi~_u from the factorisation Res(chi,chi;u) = (e^{2 pi i u} - 1)^m Res(chi, chi~_u).
Poly reduced_twist(const Poly& chi, double u);
struct TwistedFactorisation {
  cplx lhs;  // Res(chi,chi;u)
  cplx rhs;  // (e^{2 pi i u} - 1)^m Res(chi, chi~_u)
};
TwistedFactorisation twisted_factorization_check(const Poly& chi, double u);

// g(A,u) = prod_{i != j} (sigma_i - e^{2 pi i u} sigma_j), computed without an eigensolver.
cplx g_function(const Mat& A, double u);
cplx g_function_from_poly(const Poly& chi, double u);

// max |coefficient difference| <= m! M^{m-1} ||A - A'||, M = max{1, ||A||, ||A'||}.
double poly_perturbation_bound(const Mat& A, const Mat& Ap);
// |a_k - b_k| <= k C(m,k) M^{k-1} ||B - A|| with M = max{||A||, ||B||}.
double charpoly_coefficient_bound(const Mat& A, const Mat& B, int k);

// |Res(chi1,chi2)| <= (m1+m2)! (1+|chi1|)^{m2} (1+|chi2|)^{m1}
double resultant_bound(const Poly& chi1, const Poly& chi2);
// |Res(chi1+eta1, chi2+eta2) - Res(chi1,chi2)| <= (m1+m2+1)! (1+|chi1|)^{m2} (1+|chi2|)^{m1} max|eta|
double resultant_difference_bound(const Poly& chi1, const Poly& chi2, double eta_sup);

bool is_zero_resultant(cplx value, const Poly& chi1, const Poly& chi2);

}  // namespace qpkam
