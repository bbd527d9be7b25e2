#include <doctest.h>

#include <algorithm>

#include "generators.hpp"

using namespace qpkam;

namespace {

cplx g_brute(const Mat& A, double u) {
  const auto s = eigenvalues(A);
  cplx p = 1.0;
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = 0; j < s.size(); ++j)
      if (i != j) p *= s[i] - expi2pi(u) * s[j];
  return p;
}

}  // namespace

TEST_CASE("characteristic polynomial has the eigenvalues as roots") {
  gen::Rng r(21);
  for (int t = 0; t < 50; ++t) {
    const Mat A = gen::matrix(r, r.integer(1, 5));
    const auto chi = characteristic_poly(A);
    for (cplx z : eigenvalues(A)) CHECK(std::abs(poly_eval(chi, z)) < 1e-9 * (1 + sup_coeff(chi)));
  }
}

TEST_CASE("resultant equals the product over root pairs") {
  gen::Rng r(22);
  for (int t = 0; t < 100; ++t) {
    std::vector<cplx> a(r.integer(1, 4)), b(r.integer(1, 4));
    for (auto& x : a) x = r.complex();
    for (auto& x : b) x = r.complex();
    cplx expect = 1.0;
    for (cplx x : a)
      for (cplx y : b) expect *= x - y;
    const cplx got = resultant(characteristic_poly(a), characteristic_poly(b));
    CHECK(std::abs(got - expect) < 1e-10 * (1 + std::abs(expect)));
    const double u = r.uniform();
    cplx tw = 1.0;
    for (cplx x : a)
      for (cplx y : b) tw *= x - expi2pi(u) * y;
    CHECK(std::abs(resultant_twisted(characteristic_poly(a), characteristic_poly(b), u) - tw) < 1e-10 * (1 + std::abs(tw)));
  }
}

TEST_CASE("twisted factorisation") {
  gen::Rng r(23);
  for (int t = 0; t < 50; ++t) {
    const auto chi = gen::monic(r, r.integer(1, 5));
    const auto f = twisted_factorization_check(chi, r.uniform(0.05, 0.95));
    CHECK(std::abs(f.lhs - f.rhs) < 1e-9 * (1 + std::abs(f.lhs)));
  }
}

TEST_CASE("g_function agrees with the eigenvalue product") {
  gen::Rng r(24);
  for (int t = 0; t < 100; ++t) {
    const Mat A = gen::spread_matrix(r, r.integer(2, 5));
    const double u = r.uniform();
    const cplx e = g_brute(A, u);
    CHECK(std::abs(g_function(A, u) - e) <= 1e-8 * std::max(1.0, std::abs(e)));
  }
}

TEST_CASE("perturbation bounds hold on random trials") {
  gen::Rng r(25);
  for (int t = 0; t < 200; ++t) {
    const int m = r.integer(1, 5);
    const Mat A = gen::matrix(r, m), B = A + gen::matrix(r, m, std::pow(10.0, -r.uniform(1, 8)));
    const auto a = characteristic_poly(A), b = characteristic_poly(B);
    double diff = 0.0;
    for (int k = 0; k <= m; ++k) {
      diff = std::max(diff, std::abs(a[k] - b[k]));
      CHECK(std::abs(a[k] - b[k]) <= charpoly_coefficient_bound(A, B, k) * (1 + 1e-9) + 1e-13);
    }
    CHECK(diff <= poly_perturbation_bound(A, B) * (1 + 1e-9) + 1e-13);
  }
}

TEST_CASE("zero resultant detection on a shared root") {
  gen::Rng r(26);
  const cplx z = r.complex();
  const auto p = characteristic_poly(std::vector<cplx>{z, r.complex()});
  const auto q = characteristic_poly(std::vector<cplx>{z, r.complex(), r.complex()});
  CHECK(is_zero_resultant(resultant(p, q), p, q));
  const auto s = characteristic_poly(std::vector<cplx>{z + 0.5});
  CHECK_FALSE(is_zero_resultant(resultant(p, s), p, s));
}
