#include <doctest.h>

#include "generators.hpp"
#include "qpkam/duality.hpp"
#include "qpkam/lyapunov.hpp"

using namespace qpkam;

TEST_CASE("potential validation") {
  CHECK_NOTHROW(TrigPotential::from({cplx(1, 2), 0.5, cplx(1, -2)}));
  CHECK_THROWS_AS(TrigPotential::from({cplx(1, 2), 0.5, cplx(1, 2)}), Error);
  CHECK_THROWS_AS(TrigPotential::from({0.0, 1.0, 0.0}), Error);
}

TEST_CASE("companion matrix is symplectic up to sign for a real cosine") {
  gen::Rng r(61);
  for (int t = 0; t < 20; ++t) {
    const Mat A = companion_matrix(TrigPotential::cosine(), r.uniform(-3, 3));
    CHECK(std::abs(std::abs(A.determinant()) - 1.0) < 1e-12);
  }
}

TEST_CASE("free dual IDS follows the arccos law") {
  const auto w = gen::golden();
  LongRangeOperator op{OperatorKind::dual_1d, TrigPotential::cosine(), cosine_W(1), 0.0, w};
  std::vector<double> E;
  for (int i = 0; i <= 380; ++i) E.push_back(-1.9 + 0.01 * i);
  const auto c = ids(op, E, 500, 1);
  for (size_t i = 0; i < E.size(); ++i) CHECK(std::abs(c.N_values[i] - free_ids(E[i])) <= 2.0 / 500);
}

TEST_CASE("parallel and serial IDS agree") {
  const auto w = gen::golden();
  LongRangeOperator op{OperatorKind::dual_1d, TrigPotential::cosine(), cosine_W(1), 0.3, w};
  const auto a = ids(op, {-1.0, 0.0, 1.0}, 200, 4, Boundary::dirichlet, true);
  const auto b = ids(op, {-1.0, 0.0, 1.0}, 200, 4, Boundary::dirichlet, false);
  CHECK(a.eigenvalues == b.eigenvalues);
}

TEST_CASE("property: Lyapunov exponents pair up") {
  gen::Rng r(62);
  const auto w = gen::golden();
  for (int t = 0; t < 8; ++t) {
    LyapunovOptions o;
    o.n = 3000;
    o.theta_samples = 4;
    const auto g =
        lyapunov_exponents(companion_cocycle(TrigPotential::cosine(), cosine_W(1), r.uniform(0, 0.5),
                                             r.uniform(-3, 3), w),
                           o);
    CHECK(std::abs(g[0] + g[1]) < 0.05);
    CHECK(g[0] >= g[1]);
  }
}

TEST_CASE("parallel and serial Lyapunov agree") {
  const auto w = gen::golden();
  const auto c = companion_cocycle(TrigPotential::cosine(), cosine_W(1), 0.2, 0.7, w);
  LyapunovOptions o;
  o.n = 2000;
  o.theta_samples = 4;
  const auto a = lyapunov_exponents(c, o), b = lyapunov_exponents_serial(c, o);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
}

TEST_CASE("Thouless identity away from the free spectrum") {
  const auto w = gen::golden();
  const auto V = TrigPotential::cosine();
  LongRangeOperator op{OperatorKind::dual_1d, V, cosine_W(1), 0.0, w};
  const auto c = ids(op, {0.0}, 1000, 1);
  const auto t = thouless_check(c, V, cosine_W(1), 0.0, w, {-3.5, -2.5, 2.5, 3.5});
  CHECK(t.max_abs() < 1e-2);
}

TEST_CASE("duality of the IDS at small coupling") {
  const auto w = gen::golden();
  std::vector<double> E;
  for (int i = 0; i <= 50; ++i) E.push_back(-2.5 + 0.1 * i);
  const auto d = duality_check(TrigPotential::cosine(), cosine_W(1), 0.1, w, E, 600, 1);
  CHECK(d.sup_diff < 0.02);
}
