#include <doctest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "qpkam/kam.hpp"
#include "qpkam/resonance.hpp"

using namespace qpkam;

TEST_CASE("homological solve passes direct substitution") {
  gen::Rng r(51);
  const auto w = gen::golden();
  for (int t = 0; t < 20; ++t) {
    const int m = r.integer(2, 4), N = r.integer(2, 8);
    const Mat A = gen::spread_matrix(r, m);
    const auto H = gen::torus(r, m, 1, N, 0.3, 1e-3);
    const auto s = Sector::single(m, N);
    const auto Y = homological_solve(A, H, w, s);
    CHECK(oracle::substitution_residual(A, Y, H, w, s) <= 1e-12);
  }
}

TEST_CASE("parallel and serial homological solvers agree") {
  gen::Rng r(52);
  const auto w = gen::golden();
  const Mat A = gen::spread_matrix(r, 3);
  const auto H = gen::torus(r, 3, 1, 12, 0.2);
  const auto s = Sector::single(3, 12);
  const auto a = HomologicalSolver(A, s, w, true).solve(H);
  const auto b = HomologicalSolver(A, s, w, false).solve(H);
  CHECK(norm_h(a.Y - b.Y, 0.0) == 0.0);
}

TEST_CASE("retained sector skips the diagonal zero mode") {
  const Sector s = Sector::single(2, 3);
  CHECK_FALSE(s.contains(0, 0, {0}));
  CHECK(s.contains(0, 1, {0}));
  CHECK(s.contains(1, 1, {2}));
  CHECK_FALSE(s.contains(1, 1, {4}));
}

TEST_CASE("exp helpers match the matrix exponential") {
  gen::Rng r(53);
  for (int t = 0; t < 20; ++t) {
    const Mat X = gen::matrix(r, 3, 1e-2);
    Mat term = X, e1 = X, e2 = Mat::Zero(3, 3);
    for (int k = 2; k < 30; ++k) {
      term = term * X / double(k);
      e1 += term;
      e2 += term;
    }
    CHECK((expm1_small(X) - e1).norm() < 1e-16);
    CHECK((expm2_small(X) - e2).norm() < 1e-18);
  }
}

TEST_CASE("conjugation remainder matches the direct product") {
  gen::Rng r(54);
  const auto w = gen::golden();
  const Mat A = gen::spread_matrix(r, 2);
  const auto F = gen::torus(r, 2, 1, 3, 0.5, 1e-4);
  const auto Y = gen::torus(r, 2, 1, 3, 0.5, 1e-3);
  const auto Q = conjugation_remainder(A, F, Y, w, 24);
  const auto full = conjugated_direct(A, F, Y, w, 24);
  const auto lin = F + Y.left(A) - Y.shifted(w).right(A);
  CHECK(norm_h(full - lin - Q, 0.0) < 1e-13);
}

TEST_CASE("nonresonant elimination shrinks the retained part") {
  gen::Rng r(55);
  const auto w = gen::golden();
  const Mat A = gen::spread_matrix(r, 2);
  const auto F = gen::torus(r, 2, 1, 4, 0.5, 1e-6);
  const auto e = eliminate_nonresonant(A, F, Sector::single(2, 4), w, 0.05, 1e-20, 20);
  CHECK(e.retained_norm < 1e-14 * norm_h(F, 0.05) + 1e-24);
}

TEST_CASE("resonance search agrees with the serial scan") {
  gen::Rng r(56);
  const auto w = gen::golden();
  for (int t = 0; t < 20; ++t) {
    std::vector<cplx> a{std::polar(1.0, r.uniform(0, kTwoPi))}, b{std::polar(1.0, r.uniform(0, kTwoPi))};
    const auto p = min_resonance(a, b, w, 40, false);
    const auto q = min_resonance_serial(a, b, w, 40, false);
    CHECK(p.second == q.second);
    CHECK(resonance_defect(a, b, w, p.first) == doctest::Approx(p.second));
  }
}
