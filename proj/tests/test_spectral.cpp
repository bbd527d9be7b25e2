#include <doctest.h>

#include "generators.hpp"
#include "oracles.hpp"

using namespace qpkam;

TEST_CASE("decomposition matches partition enumeration") {
  gen::Rng r(41);
  for (int t = 0; t < 300; ++t) {
    const int n = r.integer(1, 6);
    std::vector<cplx> v(n);
    for (auto& x : v) x = r.complex(1.0);
    if (r.integer(0, 1)) v[n - 1] = v[0] + r.complex(0.05);
    const double mu = r.uniform(0.01, 0.6);
    const auto d = maximal_separated_decomposition(v, mu);
    CHECK(oracle::canonical(d.clusters) == oracle::finest_separated_partition(v, mu));
    CHECK(d.zeta <= n * mu);
  }
}

TEST_CASE("Hausdorff and set distances") {
  const std::vector<cplx> a{0.0, 1.0}, b{0.1, 3.0};
  CHECK(set_distance(a, b) == doctest::Approx(0.1));
  CHECK(hausdorff(a, b) == doctest::Approx(2.0));
  CHECK(diameter(b) == doctest::Approx(2.9));
}

TEST_CASE("block split separates labelled eigenvalues") {
  gen::Rng r(42);
  for (int t = 0; t < 40; ++t) {
    const int m = r.integer(2, 6);
    const Mat A = gen::spread_matrix(r, m);
    const auto ev = eigenvalues(A);
    const double cut = ev[0].real();
    auto label = [&](cplx z) { return z.real() <= cut + 1e-9 ? 0 : 1; };
    int l = 1;
    for (cplx z : ev) l = std::max(l, label(z) + 1);
    const auto s = block_split(A, label, l);
    const Mat D = s.S.inverse() * A * s.S;
    CHECK(off_block_norm(D, s.sizes) < 1e-9 * opnorm(A));
    CHECK((block_diag(s.blocks) - D).norm() < 1e-9 * opnorm(A));
  }
}
