#include "qpkam/poly.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace qpkam {

int degree(const Poly& p) { return static_cast<int>(p.size()) - 1; }

double sup_coeff(const Poly& p) {
  double s = 0.0;
  for (auto c : p) s = std::max(s, std::abs(c));
  return s;
}

cplx poly_eval(const Poly& p, cplx x) {
  cplx acc = 0.0;
  for (auto c : p) acc = acc * x + c;
  return acc;
}

Poly characteristic_poly(const std::vector<cplx>& roots) {
  Poly p{1.0};
  for (cplx r : roots) {
    Poly q(p.size() + 1, 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
      q[i] += p[i];
      q[i + 1] -= r * p[i];
    }
    p = std::move(q);
  }
  return p;
}

std::vector<cplx> eigenvalues(const Mat& A) {
  if (A.rows() == 1) return {A(0, 0)};
  Eigen::ComplexEigenSolver<Mat> es(A, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NearSingular, "eigensolver failed");
  std::vector<cplx> ev(A.rows());
  for (int i = 0; i < A.rows(); ++i) ev[i] = es.eigenvalues()(i);
  return ev;
}

Poly characteristic_poly(const Mat& A) {
  if (A.rows() > kDegreeCap) throw Error(ErrorKind::DegreeCap, "matrix size above degree cap");
  return characteristic_poly(eigenvalues(A));
}

Mat sylvester_matrix(const Poly& p, const Poly& q) {
  const int n1 = degree(p), n2 = degree(q);
  if (n1 > kDegreeCap || n2 > kDegreeCap) {
    json w;
    w["deg1"] = n1;
    w["deg2"] = n2;
    throw Error(ErrorKind::DegreeCap, "resultant degree above cap", w);
  }
  const int n = n1 + n2;
  Mat S = Mat::Zero(n, n);
  for (int r = 0; r < n2; ++r)
    for (int i = 0; i <= n1; ++i) S(r, r + i) = p[i];
  for (int r = 0; r < n1; ++r)
    for (int i = 0; i <= n2; ++i) S(n2 + r, r + i) = q[i];
  return S;
}

cplx resultant(const Poly& p, const Poly& q) {
  const int n1 = degree(p), n2 = degree(q);
  if (n1 == 0 && n2 == 0) return 1.0;
  if (n1 == 0) return std::pow(p[0], n2);
  if (n2 == 0) return std::pow(q[0], n1);
  Mat S = sylvester_matrix(p, q);
  Eigen::PartialPivLU<Mat> lu(S);
  return lu.determinant();
}

Poly twist(const Poly& chi, double u) {
  Poly out(chi.size());
  for (size_t i = 0; i < chi.size(); ++i) out[i] = chi[i] * expi2pi(u * static_cast<double>(i));
  return out;
}

cplx resultant_twisted(const Poly& chi1, const Poly& chi2, double u) { return resultant(chi1, twist(chi2, u)); }

Poly reduced_twist(const Poly& chi, double u) {
  const int m = degree(chi);
  Poly out(m);
  const cplx e = expi2pi(u);
  // (e^{j} - 1)/(e - 1) = 1 + e + ... + e^{j-1}
  for (int j = 1; j <= m; ++j) {
    cplx s = 0.0, pw = 1.0;
    for (int t = 0; t < j; ++t) {
      s += pw;
      pw *= e;
    }
    out[j - 1] = s * chi[j];
  }
  return out;
}

TwistedFactorisation twisted_factorization_check(const Poly& chi, double u) {
  const int m = degree(chi);
  TwistedFactorisation t;
  t.lhs = resultant_twisted(chi, chi, u);
  t.rhs = std::pow(expi2pi(u) - 1.0, m) * resultant(chi, reduced_twist(chi, u));
  return t;
}

namespace {

Poly derivative(const Poly& p) {
  const int n = degree(p);
  Poly d(n);
  for (int i = 0; i < n; ++i) d[i] = p[i] * static_cast<double>(n - i);
  return d;
}

}  // namespace

cplx g_function_from_poly(const Poly& chi, double u) {
  const int m = degree(chi);
  if (m <= 1) return 1.0;
  const cplx det = (m % 2 ? -1.0 : 1.0) * chi[m];
  const double frac = u - std::round(u);
  if (frac == 0.0) return resultant(chi, derivative(chi));
  const cplx one_minus_e = 1.0 - expi2pi(u);
  if (std::abs(one_minus_e) < 1e-4 || det == 0.0) {
    // Res(chi,chi;u) = (e-1)^m Res(chi, chi~_u) and Res(chi,chi;u) = g det (1-e)^m
    return (m % 2 ? -1.0 : 1.0) * resultant(chi, reduced_twist(chi, u)) / det;
  }
  return resultant_twisted(chi, chi, u) / (det * std::pow(one_minus_e, m));
}

cplx g_function(const Mat& A, double u) { return g_function_from_poly(characteristic_poly(A), u); }

double poly_perturbation_bound(const Mat& A, const Mat& Ap) {
  const int m = static_cast<int>(A.rows());
  const double M = std::max({1.0, opnorm(A), opnorm(Ap)});
  return std::exp(log_factorial(m) + (m - 1) * std::log(M)) * opnorm(A - Ap);
}

double charpoly_coefficient_bound(const Mat& A, const Mat& B, int k) {
  const int m = static_cast<int>(A.rows());
  const double M = std::max(opnorm(A), opnorm(B));
  return k * std::exp(log_binomial(m, k)) * std::pow(M, k - 1) * opnorm(B - A);
}

double resultant_bound(const Poly& chi1, const Poly& chi2) {
  const int m1 = degree(chi1), m2 = degree(chi2);
  return std::exp(log_factorial(m1 + m2) + m2 * std::log1p(sup_coeff(chi1)) + m1 * std::log1p(sup_coeff(chi2)));
}

double resultant_difference_bound(const Poly& chi1, const Poly& chi2, double eta_sup) {
  if (eta_sup > 1.0) throw Error(ErrorKind::Domain, "perturbation must satisfy |eta| <= 1");
  const int m1 = degree(chi1), m2 = degree(chi2);
  return std::exp(log_factorial(m1 + m2 + 1) + m2 * std::log1p(sup_coeff(chi1)) +
                  m1 * std::log1p(sup_coeff(chi2))) *
         eta_sup;
}

bool is_zero_resultant(cplx value, const Poly& chi1, const Poly& chi2) {
  const int m1 = degree(chi1), m2 = degree(chi2);
  const double scale = std::exp(m2 * std::log1p(sup_coeff(chi1)) + m1 * std::log1p(sup_coeff(chi2)));
  return std::abs(value) < 1e-12 * scale;
}

}  // namespace qpkam
