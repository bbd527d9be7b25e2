// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include "qpkam/duality.hpp"
#include "qpkam/full_measure.hpp"
#include "qpkam/homological.hpp"
#include "qpkam/lyapunov.hpp"
#include "qpkam/resonance.hpp"

using namespace qpkam;

namespace {

const Frequency& golden() {
  static const Frequency w = Frequency::certify({(std::sqrt(5.0) - 1.0) / 2.0}, 2000);
  return w;
}

TorusMatrix smooth(int m, int N) {
  TorusMatrix f(m, 1);
  for (int k = -N; k <= N; ++k) {
    Mat C(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) C(i, j) = cplx(std::cos(i + 2.0 * j + k), std::sin(3.0 * i - j + k)) * std::exp(-0.2 * std::abs(k));
    f.at({k}) = C;
  }
  return f;
}

void BM_homological(benchmark::State& st) {
  const bool par = st.range(0);
  const int m = 4, N = 64;
  Mat A = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) A(i, i) = std::polar(1.0 + 0.1 * i, 0.7 * i + 0.3);
  const auto H = smooth(m, N);
  for (auto _ : st) {
    HomologicalSolver s(A, Sector::single(m, N), golden(), par);
    benchmark::DoNotOptimize(s.solve(H));
  }
}
BENCHMARK(BM_homological)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_ids(benchmark::State& st) {
  const bool par = st.range(0);
  LongRangeOperator op{OperatorKind::dual_1d, TrigPotential::cosine(), cosine_W(1), 0.5, golden()};
  for (auto _ : st) benchmark::DoNotOptimize(ids(op, {0.0}, 400, 8, Boundary::dirichlet, par));
}
BENCHMARK(BM_ids)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_lyapunov(benchmark::State& st) {
  const auto c = companion_cocycle(TrigPotential::cosine(), cosine_W(1), 0.3, 0.4, golden());
  LyapunovOptions o;
  o.n = 5000;
  o.theta_samples = 8;
  for (auto _ : st) benchmark::DoNotOptimize(st.range(0) ? lyapunov_exponents(c, o) : lyapunov_exponents_serial(c, o));
}
BENCHMARK(BM_lyapunov)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_resonance(benchmark::State& st) {
  const std::vector<cplx> a{std::polar(1.0, 0.3), std::polar(1.0, 1.1)}, b{std::polar(1.0, -0.8)};
  for (auto _ : st)
    benchmark::DoNotOptimize(st.range(0) ? min_resonance(a, b, golden(), 200000, true)
                                         : min_resonance_serial(a, b, golden(), 200000, true));
}
BENCHMARK(BM_resonance)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_full_measure(benchmark::State& st) {
  static const auto setup = [] {
    const auto V = TrigPotential::cosine();
    auto fam = companion_family(V, cosine_W(1), 1e-6, golden());
    KamOptions opt;
    opt.schedule.ln_eps = std::log(1e-6);
    opt.schedule.gamma = golden().gamma;
    opt.schedule.tau = golden().tau;
    opt.nu_prime = 0.05;
    auto run = run_kam(fam, -1.5, -0.5, nondegeneracy_certify(V, -2.0, 0.0).cert, 2, opt);
    return std::make_tuple(fam, opt, run);
  }();
  const auto& [fam, opt, run] = setup;
  FullMeasureOptions fo;
  fo.stages = 2;
  fo.parallel = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(reduce_full_measure(run, fam, opt, {-1.2, -0.8}, fo));
}
BENCHMARK(BM_full_measure)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
