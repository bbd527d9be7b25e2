#include <doctest.h>

#include "generators.hpp"
#include "qpkam/duality.hpp"
#include "qpkam/exclusion_set.hpp"

using namespace qpkam;

TEST_CASE("rho sums of interval lists") {
  const std::vector<Interval> v{{0.0, 0.01}, {0.5, 0.52}};
  CHECK(rho_sum(v, 1.0) == doctest::Approx(0.03));
  CHECK(rho_sum(v, 0.5) == doctest::Approx(0.1 + std::sqrt(0.02)).epsilon(1e-12));
  CHECK(rho_sum(v, 0.5) == doctest::Approx(0.2414).epsilon(1e-4));
}

TEST_CASE("interval algebra") {
  const auto m = merge_intervals({{0.3, 0.5}, {0.0, 0.1}, {0.05, 0.2}});
  REQUIRE(m.size() == 2);
  CHECK(m[0].lo == 0.0);
  CHECK(m[0].hi == 0.2);
  const auto s = subtract_intervals({{0.0, 1.0}}, {{0.2, 0.3}, {0.5, 0.6}});
  CHECK(total_length(s) == doctest::Approx(0.8));
  CHECK(s.size() == 3);
  CHECK(total_length(intersect_intervals(s, {{0.25, 0.55}})) == doctest::Approx(0.2));
}

TEST_CASE("property: subtract and intersect partition a set") {
  gen::Rng r(31);
  for (int t = 0; t < 200; ++t) {
    std::vector<Interval> a, b;
    for (int i = 0; i < r.integer(1, 6); ++i) {
      const double x = r.uniform();
      a.push_back({x, x + r.uniform(0, 0.2)});
    }
    for (int i = 0; i < r.integer(1, 6); ++i) {
      const double x = r.uniform();
      b.push_back({x, x + r.uniform(0, 0.2)});
    }
    const double la = total_length(a);
    CHECK(total_length(subtract_intervals(a, b)) + total_length(intersect_intervals(a, b)) ==
          doctest::Approx(la).epsilon(1e-12));
  }
}

TEST_CASE("chop drops the noise tail only") {
  const auto f = ScalarFamily::sample(-1.0, 1.0, 40, [](double x) { return cplx(1.0 + x * x, 0.0); });
  const auto c = chop(f);
  CHECK(c.degree() <= 4);
  for (double x : {-0.9, -0.3, 0.2, 0.8}) CHECK(std::abs(c(x) - f(x)) < 1e-12);
}

TEST_CASE("property: small-value exclusion covers every small point") {
  gen::Rng r(32);
  int tried = 0;
  for (int t = 0; t < 20; ++t) {
    const auto f = gen::real_poly_family(r, r.integer(1, 4), 0.0, 1.0);
    const int deg = f.degree() - 2;
    PyartliCert cert;
    try {
      cert = grid_certify(f, std::max(deg, 1), 2048);
    } catch (const Error&) {
      continue;
    }
    ++tried;
    const double sigma = 0.25 * cert.c;
    const auto ex = exclude_small_values(f, cert, sigma);
    CHECK(ex.intervals.size() <= ex.count_bound);
    for (const auto& I : ex.intervals) CHECK(I.length() <= ex.length_bound * (1 + 1e-12));
    for (int i = 0; i <= 5000; ++i) {
      const double x = i / 5000.0;
      if (std::abs(f(x)) >= sigma) continue;
      bool covered = false;
      for (const auto& I : ex.intervals) covered = covered || (x >= I.lo && x <= I.hi);
      CHECK(covered);
    }
  }
  CHECK(tried > 10);
}

TEST_CASE("companion family of 2cos is transverse of order 2") {
  const auto nd = nondegeneracy_certify(TrigPotential::cosine(), -3.5, 3.5);
  CHECK(nd.cert.r == 2);
  CHECK(nd.cert.c.value() > 1.0);
  CHECK(nd.finite_ok);
}

TEST_CASE("product and factor certificates invert") {
  TransverseCert t;
  t.M = LogValue::of(4.0);
  t.c = LogValue::of(0.5);
  t.r = 2;
  t.delta = 0.3;
  const auto p = product_transversality({t, t, t});
  CHECK(p.r == 6);
  CHECK(p.c.ln <= t.c.ln);
  CHECK(p.M.ln == doctest::Approx(3 * t.M.ln));
  const auto back = factor_transversality(p, 3, t.M);
  CHECK(back.c.ln <= t.c.ln + 1e-12);
}

TEST_CASE("product certificate plug-in values") {
  TransverseCert t;
  t.M = LogValue::of(2.0);
  t.c = LogValue::of(1.0);
  t.r = 1;
  t.delta = 1.0;
  const auto p = product_transversality({t, t});
  CHECK(p.M.ln == doctest::Approx(std::log(4.0)));
  CHECK(p.r == 2);
  // ((1/(4 * 2^2 * 2))^{2*2} * 1)^{2^3}
  CHECK(p.c.ln == doctest::Approx(-32.0 * std::log(32.0)));
  const auto one = product_transversality({t});
  CHECK(one.c.ln <= t.c.ln);
}

TEST_CASE("factor certificate plug-in values") {
  TransverseCert t;
  t.c = LogValue::of(1.0);
  t.r = 1;
  t.delta = 2.0;
  CHECK(factor_transversality(t, 2, LogValue::of(1.0)).c.ln == doctest::Approx(std::log(0.25)));
}
