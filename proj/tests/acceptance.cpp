// Acceptance checks, one line per criterion; nonzero exit when any fails.
#include <chrono>
#include <cstdio>
#include <string>

#include "generators.hpp"
#include "oracles.hpp"
#include "qpkam/duality.hpp"
#include "qpkam/full_measure.hpp"
#include "qpkam/lyapunov.hpp"

using namespace qpkam;

namespace {

constexpr double kCoupling = 1e-6;
constexpr double kContractionPower = 1.3;
constexpr double kRuntimeLimit = 300.0;
constexpr double kResidualTol = 1e-8;
constexpr int kResidualSamples = 64;
constexpr double kSimpleFraction = 0.95;
constexpr double kThoulessTol = 1e-2;
constexpr double kHalvingLo = 0.3, kHalvingHi = 0.8;
constexpr double kDualityTol = 0.02;
constexpr double kPairingTol = 0.05;
constexpr double kHolderLo = 0.45, kHolderHi = 0.55, kHolderCoupled = 0.25;
constexpr double kGTol = 1e-8;
constexpr double kHomologicalTol = 1e-12;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Kam {
  Frequency w = gen::golden();
  TrigPotential V = TrigPotential::cosine();
  CocycleFamily fam = companion_family(V, cosine_W(1), kCoupling, w);
  KamOptions opt;
  KamRun run;
  double seconds = 0.0;
};

void kam_criteria(Kam& k) {
  const auto nd = nondegeneracy_certify(k.V, -3.5, 3.5);
  k.opt.schedule.ln_eps = std::log(kCoupling);
  k.opt.schedule.gamma = k.w.gamma;
  k.opt.schedule.tau = k.w.tau;
  k.opt.nu_prime = 0.05;
  const auto t0 = std::chrono::steady_clock::now();
  k.run = run_kam(k.fam, -3.0, 3.0, nd.cert, 4, k.opt);
  k.seconds = seconds_since(t0);

  int used = 0, skipped = 0, bad = 0;
  double worst = -HUGE_VAL;
  for (int i = 0; i < 20; ++i) {
    const double E = -3.0 + 6.0 * (i + 0.5) / 20;
    const KamCell* c = find_cell(k.run.cells, E);
    if (!c || c->excluded) {
      ++skipped;
      continue;
    }
    ++used;
    for (int n = 0; n < 4; ++n) {
      const double a = stage_norm(*c, n, E), b = stage_norm(*c, n + 1, E);
      const double margin = b == 0.0 ? -HUGE_VAL : std::log(b) - kContractionPower * std::log(a);
      worst = std::max(worst, margin);
      if (margin > 0.0) ++bad;
    }
  }
  report(1, "kam-contraction", used > 0 && bad == 0 && k.seconds < kRuntimeLimit,
         fmt("samples=%d skipped=%d violations=%d max(ln F_{n+1} - 1.3 ln F_n)=%.3g runtime=%.1fs (limit %.0fs)", used,
             skipped, bad, worst, k.seconds, kRuntimeLimit));

  std::vector<const KamCell*> live;
  double len = 0.0;
  for (const auto& c : k.run.cells)
    if (!c.excluded) live.push_back(&c), len += c.b - c.a;
  gen::Rng r(2024);
  double worst_res = 0.0;
  int evaluated = 0;
  for (int s = 0; s <= 4 && !live.empty(); ++s)
    for (int i = 0; i < kResidualSamples; ++i) {
      double pick = r.uniform(0.0, len);
      const KamCell* c = live.back();
      for (const auto* q : live) {
        if (pick <= q->b - q->a) {
          c = q;
          break;
        }
        pick -= q->b - q->a;
      }
      const double lam = r.uniform(c->a, c->b);
      worst_res = std::max(worst_res, conjugacy_residual(*c, k.fam, s, {r.uniform()}, lam));
      ++evaluated;
    }
  report(2, "conjugacy-soundness", evaluated == 5 * kResidualSamples && worst_res < kResidualTol,
         fmt("stages=5 points/stage=%d max residual ratio=%.3g (tol %.0e)", kResidualSamples, worst_res, kResidualTol));

  std::vector<double> samples;
  for (int i = 0; i < 200; ++i) samples.push_back(-3.0 + 6.0 * (i + 0.5) / 200);
  FullMeasureOptions fo;
  fo.stages = 4;
  const auto fm = reduce_full_measure(k.run, k.fam, k.opt, samples, fo);
  bool bounds = true;
  for (const auto& st : fm.exclusions.stages) bounds = bounds && st.length_ok() && st.count_ok();
  const auto& rep = fm.report;
  report(3, "simple-endpoint",
         rep.surviving > 0 && rep.simple_fraction() >= kSimpleFraction && bounds && rep.contraction_ok,
         fmt("simple %d/%d=%.3f (need %.2f) floor=%.4g bounds=%s contraction=%s excluded length=%.3g", rep.simple,
             rep.surviving, rep.simple_fraction(), kSimpleFraction, rep.gap_floor, bounds ? "ok" : "violated",
             rep.contraction_ok ? "ok" : "violated", fm.exclusions.excluded_length()));

  const auto rho = fm.exclusions.stage_rho(0.5);
  bool dec = rho.size() == 4;
  std::string list;
  for (size_t i = 0; i < rho.size(); ++i) {
    if (i && !(rho[i] < rho[i - 1])) dec = false;
    list += fmt("%s%.4g", i ? " > " : "", rho[i]);
  }
  report(11, "rho-sum-decay", dec, "stage rho_sum(0.5): " + list);
}

void thouless_criterion(const Frequency& w) {
  const auto V = TrigPotential::cosine();
  std::vector<double> E;
  for (int i = 0; i <= 38; ++i) {
    E.push_back(-4.0 + 0.05 * i);
    E.push_back(2.1 + 0.05 * i);
  }
  double r[2];
  for (int q = 0; q < 2; ++q) {
    LongRangeOperator op{OperatorKind::dual_1d, V, cosine_W(1), 0.0, w};
    r[q] = thouless_check(ids(op, {0.0}, 2000 << q, 1), V, cosine_W(1), 0.0, w, E).max_abs();
  }
  const double ratio = r[1] / r[0];
  report(4, "thouless-identity", r[0] < kThoulessTol && ratio >= kHalvingLo && ratio <= kHalvingHi,
         fmt("max residual n=2000: %.3g (tol %.0e), n=4000: %.3g, ratio %.3f in [%.1f, %.1f]", r[0], kThoulessTol,
             r[1], ratio, kHalvingLo, kHalvingHi));
}

void duality_criterion(const Frequency& w) {
  std::vector<double> E;
  for (int i = 0; i <= 500; ++i) E.push_back(-2.5 + 0.01 * i);
  const auto d = duality_check(TrigPotential::cosine(), cosine_W(1), 0.05, w, E, 2000, 1);
  report(5, "ids-duality", d.sup_diff < kDualityTol, fmt("sup |N - N^| = %.4g (tol %.2f)", d.sup_diff, kDualityTol));
}

void free_ids_criterion(const Frequency& w) {
  std::vector<double> E;
  for (int i = 0; i <= 3800; ++i) E.push_back(-1.9 + 0.001 * i);
  LongRangeOperator op{OperatorKind::dual_1d, TrigPotential::cosine(), cosine_W(1), 0.0, w};
  const auto c = ids(op, E, 2000, 1);
  double err = 0.0;
  for (size_t i = 0; i < E.size(); ++i) err = std::max(err, std::abs(c.N_values[i] - free_ids(E[i])));
  report(6, "free-ids-closed-form", err <= 2.0 / 2000, fmt("sup error %.3g (tol 2/n = %.0e)", err, 2.0 / 2000));
}

void exclusion_criterion() {
  gen::Rng r(7);
  int families = 0, tries = 0, violations = 0, count_bad = 0, length_bad = 0;
  while (families < 100 && tries < 1000) {
    ++tries;
    const int deg = r.integer(1, 6);
    const auto f = gen::real_poly_family(r, deg, 0.0, 1.0);
    PyartliCert cert;
    try {
      cert = grid_certify(f, deg, 4096);
    } catch (const Error&) {
      continue;
    }
    ++families;
    const double sigma = 0.5 * cert.c * std::pow(10.0, -r.uniform(0.0, 3.0));
    const auto ex = exclude_small_values(f, cert, sigma);
    if (static_cast<double>(ex.intervals.size()) > ex.count_bound) ++count_bad;
    for (const auto& I : ex.intervals)
      if (I.length() > ex.length_bound * (1 + 1e-12)) ++length_bad;
    const auto cover = merge_intervals(ex.intervals);
    size_t j = 0;
    for (int i = 0; i < 100000; ++i) {
      const double x = i / 99999.0;
      if (std::abs(f(x)) >= sigma) continue;
      while (j < cover.size() && cover[j].hi < x) ++j;
      if (j == cover.size() || cover[j].lo > x) ++violations;
    }
  }
  report(7, "exclusion-soundness", families == 100 && violations == 0 && count_bad == 0 && length_bad == 0,
         fmt("families=%d scan violations=%d count overruns=%d length overruns=%d", families, violations, count_bad,
             length_bad));
}

void resultant_criterion() {
  gen::Rng r(8);
  int bad_res = 0, bad_diff = 0, bad_coef = 0, bad_poly = 0;
  for (int t = 0; t < 1000; ++t) {
    const Poly p = gen::monic(r, r.integer(1, 5)), q = gen::monic(r, r.integer(1, 5));
    if (std::abs(resultant(p, q)) > resultant_bound(p, q) * (1 + 1e-12)) ++bad_res;
    const double eta = std::pow(10.0, -r.uniform(2.0, 10.0));
    Poly pe = p, qe = q;
    for (size_t i = 1; i < pe.size(); ++i) pe[i] += std::polar(eta * r.uniform(), r.uniform(0, kTwoPi));
    for (size_t i = 1; i < qe.size(); ++i) qe[i] += std::polar(eta * r.uniform(), r.uniform(0, kTwoPi));
    if (std::abs(resultant(pe, qe) - resultant(p, q)) > resultant_difference_bound(p, q, eta) * (1 + 1e-9)) ++bad_diff;
  }
  for (int t = 0; t < 1000; ++t) {
    const int m = r.integer(1, 6);
    const Mat A = gen::matrix(r, m), B = A + gen::matrix(r, m, std::pow(10.0, -r.uniform(1.0, 9.0)));
    const auto a = characteristic_poly(A), b = characteristic_poly(B);
    double diff = 0.0;
    for (int k = 0; k <= m; ++k) {
      diff = std::max(diff, std::abs(a[k] - b[k]));
      if (std::abs(a[k] - b[k]) > charpoly_coefficient_bound(A, B, k) * (1 + 1e-9) + 1e-14) ++bad_coef;
    }
    if (diff > poly_perturbation_bound(A, B) * (1 + 1e-9) + 1e-14) ++bad_poly;
  }
  report(8, "resultant-bounds", bad_res + bad_diff + bad_coef + bad_poly == 0,
         fmt("1000 trials each: |Res| %d, Res difference %d, coefficient %d, char-poly %d violations", bad_res,
             bad_diff, bad_coef, bad_poly));
}

void pairing_criterion(const Frequency& w) {
  double worst = 0.0;
  for (double eps : {0.0, 0.1})
    for (int i = 0; i < 10; ++i) {
      LyapunovOptions o;
      o.n = 10000;
      const double E = -3.0 + 6.0 * (i + 0.5) / 10;
      const auto g = lyapunov_exponents(companion_cocycle(TrigPotential::cosine(), cosine_W(1), eps, E, w), o);
      worst = std::max(worst, std::abs(g[0] + g[1]));
    }
  report(9, "symplectic-pairing", worst < kPairingTol, fmt("max |g1 + g2| = %.3g (tol %.2f)", worst, kPairingTol));
}

void holder_criterion(const Frequency& w) {
  std::vector<double> E;
  for (int i = 0; i <= 4000; ++i) E.push_back(-3.0 + 0.0015 * i);
  LongRangeOperator free{OperatorKind::dual_1d, TrigPotential::cosine(), cosine_W(1), 0.0, w};
  const double h0 = holder_estimate(ids(free, E, 2000, 1), 1).exponent;
  LongRangeOperator amo{OperatorKind::dual_1d, TrigPotential::cosine(), cosine_W(1), 0.1, w};
  const double h1 = holder_estimate(ids(amo, E, 2000, 4), 1).exponent;
  report(10, "holder-exponent", h0 >= kHolderLo && h0 <= kHolderHi && h1 >= kHolderCoupled,
         fmt("eps=0: %.3f in [%.2f, %.2f]; eps=0.1: %.3f >= %.2f", h0, kHolderLo, kHolderHi, h1, kHolderCoupled));
}

void oracle_criterion(const Frequency& w) {
  gen::Rng r(12);
  double worst_g = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Mat A = gen::spread_matrix(r, r.integer(2, 6));
    const double u = r.uniform();
    const cplx e = oracle::g_product(A, u);
    worst_g = std::max(worst_g, std::abs(g_function(A, u) - e) / std::max(1.0, std::abs(e)));
  }
  double worst_h = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int m = r.integer(2, 4), N = r.integer(2, 10);
    const Mat A = gen::spread_matrix(r, m);
    const auto H = gen::torus(r, m, 1, N, 0.3, 1e-3);
    const auto s = Sector::single(m, N);
    worst_h = std::max(worst_h, oracle::substitution_residual(A, homological_solve(A, H, w, s), H, w, s));
  }
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = r.integer(1, 6);
    std::vector<cplx> v(n);
    for (auto& x : v) x = r.complex();
    if (n > 1 && r.integer(0, 1)) v[1] = v[0] + r.complex(0.05);
    const double mu = r.uniform(0.01, 0.6);
    if (oracle::canonical(maximal_separated_decomposition(v, mu).clusters) !=
        oracle::finest_separated_partition(v, mu))
      ++mismatches;
  }
  report(12, "brute-force-oracles", worst_g <= kGTol && worst_h <= kHomologicalTol && mismatches == 0,
         fmt("g rel err %.2g (tol %.0e); homological residual %.2g (tol %.0e); decomposition mismatches %d/1000",
             worst_g, kGTol, worst_h, kHomologicalTol, mismatches));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = gen::golden();
  auto guard = [](int id, const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("threw: ") + e.what());
    }
  };
  Kam k;
  guard(1, "kam-pipeline", [&] { kam_criteria(k); });
  guard(4, "thouless-identity", [&] { thouless_criterion(w); });
  guard(5, "ids-duality", [&] { duality_criterion(w); });
  guard(6, "free-ids-closed-form", [&] { free_ids_criterion(w); });
  guard(7, "exclusion-soundness", [] { exclusion_criterion(); });
  guard(8, "resultant-bounds", [] { resultant_criterion(); });
  guard(9, "symplectic-pairing", [&] { pairing_criterion(w); });
  guard(10, "holder-exponent", [&] { holder_criterion(w); });
  guard(12, "brute-force-oracles", [&] { oracle_criterion(w); });
  std::printf("%d failed, %.1fs\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
