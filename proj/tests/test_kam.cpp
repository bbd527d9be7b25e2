#include <doctest.h>

#include "generators.hpp"
#include "qpkam/duality.hpp"
#include "qpkam/full_measure.hpp"

using namespace qpkam;

namespace {

struct Small {
  Frequency w = gen::golden();
  CocycleFamily fam = companion_family(TrigPotential::cosine(), cosine_W(1), 1e-6, w);
  NondegeneracyReport nd = nondegeneracy_certify(TrigPotential::cosine(), -1.5, -0.5);
  KamOptions opt;
  KamRun run;
  Small() {
    opt.schedule.ln_eps = std::log(1e-6);
    opt.schedule.gamma = w.gamma;
    opt.schedule.tau = w.tau;
    opt.nu_prime = 0.05;
    run = run_kam(fam, -1.25, -0.75, nd.cert, 3, opt);
  }
};

const Small& small() {
  static const Small s;
  return s;
}

}  // namespace

TEST_CASE("practical schedule values") {
  KamSchedule s;
  CHECK(s.h(1) == doctest::Approx(0.1));
  CHECK(s.h(2) == doctest::Approx(0.075));
  CHECK(s.h(3) < s.h(2));
  CHECK(s.ln_eps_n(2) == doctest::Approx(1.5 * s.ln_eps_n(1)));
}

TEST_CASE("KAM steps contract on a small interval") {
  const auto& s = small();
  int live = 0;
  for (const auto& c : s.run.cells) {
    if (c.excluded) continue;
    ++live;
    for (const auto& rec : c.records) {
      CHECK(rec.contracts_ok);
      CHECK(rec.residual < 1e-8);
    }
    const double x = 0.5 * (c.a + c.b);
    for (size_t n = 0; n + 1 < c.snapshots.size(); ++n)
      CHECK(stage_norm(c, int(n + 1), x) <= std::pow(stage_norm(c, int(n), x), 1.3));
  }
  CHECK(live > 0);
}

TEST_CASE("rewound cells restart from the stored snapshot") {
  const auto& s = small();
  const auto cells = rewind_cells(s.run, 2);
  REQUIRE(!cells.empty());
  for (const auto& c : cells) {
    CHECK(c.stage == 2);
    const auto* orig = find_cell(s.run.cells, c.lambda0());
    REQUIRE(orig != nullptr);
    CHECK(norm_h(c.F[c.mid()], s.opt.schedule.h(2)) ==
          doctest::Approx(stage_norm(*orig, 1, c.lambda0())).epsilon(1e-6));
  }
}

TEST_CASE("full-measure stages contract and keep exclusions within bounds") {
  const auto& s = small();
  std::vector<double> samples;
  for (int i = 0; i < 20; ++i) samples.push_back(-1.25 + 0.5 * (i + 0.5) / 20);
  FullMeasureOptions fo;
  fo.stages = 2;
  const auto fm = reduce_full_measure(s.run, s.fam, s.opt, samples, fo);
  CHECK(fm.report.contraction_ok);
  for (const auto& st : fm.exclusions.stages) {
    CHECK(st.length_ok());
    CHECK(st.count_ok());
  }
  CHECK(fm.report.simple_fraction() >= 0.95);
}
