#include <doctest.h>

#include "generators.hpp"
#include "qpkam/fourier_grid.hpp"
#include "qpkam/serialize.hpp"

using namespace qpkam;

TEST_CASE("multi-index helpers") {
  CHECK(l1({3, -2}) == 5);
  CHECK(add({1, 2}, {-1, 3}) == MultiIndex{0, 5});
  CHECK(is_zero(sub({2, 2}, {2, 2})));
  CHECK(l1_ball(1, 3).size() == 7);
  CHECK(l1_ball(2, 2).size() == 13);
}

TEST_CASE("Diophantine certificate") {
  const auto w = gen::golden();
  CHECK(w.tau == doctest::Approx(1.0).epsilon(0.06));
  CHECK(w.gamma > 0.3);
  for (int k = 1; k <= 500; ++k) CHECK(dist_z(k * w.alpha[0]) >= w.gamma * std::pow(k, -w.tau) * (1 - 1e-12));
  CHECK_THROWS_AS(Frequency::certify({0.5}), Error);
  try {
    Frequency::certify({2.0 / 7.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Diophantine);
  }
}

TEST_CASE("product of torus matrices matches pointwise product") {
  gen::Rng r(11);
  for (int t = 0; t < 20; ++t) {
    const int m = r.integer(1, 3), d = r.integer(1, 2);
    const auto f = gen::torus(r, m, d, 3, 0.5), g = gen::torus(r, m, d, 3, 0.5);
    const auto fg = f * g;
    std::vector<double> th(d);
    for (double& x : th) x = r.uniform();
    CHECK((fg.eval(th) - f.eval(th) * g.eval(th)).norm() < 1e-12 * (1 + fg.eval(th).norm()));
  }
}

TEST_CASE("shift is evaluation at theta + alpha") {
  gen::Rng r(12);
  const auto w = gen::golden();
  const auto f = gen::torus(r, 2, 1, 5, 0.3);
  for (int t = 0; t < 10; ++t) {
    const double x = r.uniform();
    CHECK((f.shifted(w).eval({x}) - f.eval({x + w.alpha[0]})).norm() < 1e-12);
  }
}

TEST_CASE("norm_h is a submultiplicative weighted l1 norm") {
  gen::Rng r(13);
  for (int t = 0; t < 30; ++t) {
    const auto f = gen::torus(r, 2, 1, 4, 0.4), g = gen::torus(r, 2, 1, 4, 0.4);
    const double h = r.uniform(0.0, 0.3);
    CHECK(norm_h(f * g, h) <= norm_h(f, h) * norm_h(g, h) * (1 + 1e-12));
    CHECK(norm_h(f + g, h) <= norm_h(f, h) + norm_h(g, h) + 1e-12);
    CHECK(norm_h(f, h) == doctest::Approx(norm_h(f.truncated(2), h) + tail_norm_h(f, h, 2)));
  }
}

TEST_CASE("grid sampling and analysis round trip") {
  gen::Rng r(14);
  for (int d = 1; d <= 2; ++d) {
    const auto f = gen::torus(r, 2, d, 4, 0.2);
    FourierGrid G(d, FourierGrid::size_for(4));
    const auto back = G.analyse(G.sample(f), 4, HUGE_VAL);
    CHECK(norm_h(back - f, 0.0) < 1e-12);
  }
}

TEST_CASE("JSON round trip is bit faithful") {
  gen::Rng r(15);
  const auto f = gen::torus(r, 3, 2, 2, 0.1);
  const auto g = torus_from_json(json::parse(to_json(f).dump()));
  REQUIRE(g.coeffs().size() == f.coeffs().size());
  for (const auto& [k, v] : f.coeffs()) CHECK(g.coeff(k) == v);
  const Mat A = gen::matrix(r, 3);
  CHECK(mat_from_json(json::parse(to_json(A).dump())) == A);
}
