#include "qpkam/full_measure.hpp"

#include <algorithm>
#include <exception>
#include <random>

#include "qpkam/poly.hpp"

namespace qpkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs f(0..n-1), rethrowing the first exception after the loop.
template <class Fn>
void for_cells(int n, bool parallel, Fn&& f) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

struct CellExclusion {
  std::vector<Interval> raw;
  double C_over_c = 0.0;
  int r = 1;
  int calls = 0, fallbacks = 0;
};

// Intervals of {|g| < sigma} on a dense grid, padded by one step.
std::vector<Interval> grid_exclusion(const ScalarFamily& g, double sigma, int samples) {
  std::vector<Interval> out;
  const double a = g.a(), b = g.b(), step = (b - a) / (samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double x = a + step * i;
    if (std::abs(g(x)) < sigma) out.push_back({std::max(a, x - step), std::min(b, x + step)});
  }
  return merge_intervals(out);
}

CellExclusion exclude_cell(const KamCell& c, const Frequency& freq, int N, double sigma, int r0,
                           const FullMeasureOptions& opt) {
  CellExclusion out;
  out.r = r0;
  const MatFamily A = c.A_family();
  const int P = opt.prefilter_samples;
  const double spacing = (c.b - c.a) / (P - 1);
  for (const auto& k : l1_ball(freq.d(), N)) {
    double u = freq.dot(k);
    u -= std::floor(u);
    const ScalarFamily g = chop(g_family(A, u, c.a, c.b, opt.g_degree));
    const ScalarFamily dg = g.derivative();
    double lo = kInf, slope = 0.0;
    for (int i = 0; i < P; ++i) {
      const double x = c.a + spacing * i;
      lo = std::min(lo, std::abs(g(x)));
      slope = std::max(slope, std::abs(dg(x)));
    }
    if (lo - 0.6 * slope * spacing > sigma) continue;
    ++out.calls;
    bool done = false;
    for (int r = r0; r <= r0 + 2 && !done; ++r) {
      const PyartliCert cert = grid_certify(g, r, opt.pyartli_samples);
      if (!(cert.c > 0) || sigma > 0.5 * cert.c) continue;
      const auto ex = exclude_small_values(g, cert, sigma);
      out.raw.insert(out.raw.end(), ex.intervals.begin(), ex.intervals.end());
      out.C_over_c = std::max(out.C_over_c, cert.C / cert.c);
      out.r = std::max(out.r, r);
      done = true;
    }
    if (!done) {
      const auto v = grid_exclusion(g, sigma, 8 * opt.pyartli_samples);
      out.raw.insert(out.raw.end(), v.begin(), v.end());
      ++out.fallbacks;
    }
  }
  return out;
}

// min |sigma_a - e_k sigma_b| over 0 < |k| <= N.
double min_divisor(const Mat& A, const Frequency& freq, int N) {
  const auto ev = eigenvalues(A);
  double best = kInf;
  for (const auto& k : l1_ball(freq.d(), N)) {
    if (is_zero(k)) continue;
    const cplx e = freq.phase(k);
    for (cplx x : ev)
      for (cplx y : ev) best = std::min(best, std::abs(x - e * y));
  }
  return best;
}

double min_gap(const Mat& A) {
  const auto ev = eigenvalues(A);
  double g = kInf;
  for (size_t i = 0; i < ev.size(); ++i)
    for (size_t j = i + 1; j < ev.size(); ++j) g = std::min(g, std::abs(ev[i] - ev[j]));
  return g;
}

double cells_max_norm(const std::vector<KamCell>& cells, double h) {
  double e = 0.0;
  for (const auto& c : cells)
    for (const auto& f : c.F) e = std::max(e, norm_h(f, h));
  return e;
}

std::vector<Interval> cell_union(const std::vector<KamCell>& cells) {
  std::vector<Interval> v;
  for (const auto& c : cells) v.push_back({c.a, c.b});
  return merge_intervals(v);
}

}  // namespace

std::vector<KamCell> rewind_cells(const KamRun& run, int stage) {
  std::vector<KamCell> out;
  for (const auto& c0 : run.cells) {
    if (c0.excluded) continue;
    if (static_cast<int>(c0.snapshots.size()) < stage)
      throw Error(ErrorKind::Domain, "cell has no snapshot at the requested stage",
                  {{"cell", {c0.a, c0.b}}, {"stage", stage}, {"available", c0.snapshots.size()}});
    KamCell c = c0;
    const auto& snap = c0.snapshots[stage - 1];
    c.stage = stage;
    c.chain.resize(snap.chain_len);
    c.snapshots.resize(stage);
    c.records.resize(std::min<std::size_t>(c.records.size(), stage - 1));
    c.A.clear();
    c.F.clear();
    for (double x : c.nodes) {
      c.A.push_back((*snap.A)(x));
      c.F.push_back((*snap.F)(x));
    }
    c.sizes = {static_cast<int>(c.A[0].rows())};
    out.push_back(std::move(c));
  }
  return out;
}

FullMeasure reduce_full_measure(const KamRun& run, const CocycleFamily& fam, const KamOptions& kam,
                                const std::vector<double>& samples, const FullMeasureOptions& opt) {
  if (opt.stages < 1 || opt.start_stage < 1 || !(opt.kappa > 1.0))
    throw Error(ErrorKind::Domain, "full-measure options out of range",
                {{"stages", opt.stages}, {"start_stage", opt.start_stage}, {"kappa", opt.kappa}});
  const Frequency& freq = fam.freq;
  const KamSchedule& sch = kam.schedule;
  FullMeasure out;
  auto& rep = out.report;
  auto& ex = out.exclusions;
  std::vector<KamCell> cells = rewind_cells(run, opt.start_stage);
  if (!run.cells.empty()) {
    ex.a = kInf;
    ex.b = -kInf;
    for (const auto& c : run.cells) {
      ex.a = std::min(ex.a, c.a);
      ex.b = std::max(ex.b, c.b);
      if (c.excluded) ex.prior.push_back({c.a, c.b});
    }
    ex.prior = merge_intervals(ex.prior);
  }
  rep.start_stage = opt.start_stage;
  if (cells.empty()) return out;

  const int m = static_cast<int>(cells[0].A[0].rows());
  const int d = freq.d();
  const int r = std::max(1, opt.r_tilde > 0 ? opt.r_tilde : run.cert.r);
  rep.r_tilde = r;
  rep.m = m;
  const double h_tilde1 = sch.h(opt.start_stage);
  rep.eps1 = cells_max_norm(cells, h_tilde1);
  rep.gap_floor = rep.eps1 > 0 ? std::pow(rep.eps1, 1.0 / (5.0 * m * m * r)) : 0.0;

  double eps = rep.eps1, h1 = h_tilde1;
  int N_prev = 0, N_first = 0;
  for (int j = 1; j <= opt.stages && eps > 0; ++j) {
    const int n = cells[0].stage;
    const double h = h1;
    h1 = h - h_tilde1 / std::pow(2.0, j + 1);
    FullStageRecord rec;
    rec.j = j;
    rec.n = n;
    rec.eps_tilde = eps;
    rec.eps_next = std::pow(eps, opt.kappa);
    rec.measured_in = cells_max_norm(cells, h);
    rec.K_inv = std::pow(eps, 1.0 / (10.0 * r));
    rec.cells_in = static_cast<int>(cells.size());

    int N = 1;
    {
      const double target = 0.01 * rec.eps_next;
      for (; N < opt.N_cap; ++N) {
        double worst = 0.0;
        for (const auto& c : cells)
          for (const auto& f : c.F) worst = std::max(worst, tail_norm_h(f, h1, N));
        if (worst <= target) break;
      }
      if (N >= opt.N_cap) rec.notes.push_back("tail target not met below the mode cap");
    }
    if (j == 1) N_first = N;
    N = std::max({N, N_prev + 1, static_cast<int>(std::ceil(N_first * std::log(eps) / std::log(rep.eps1)))});
    N = std::min(N, opt.N_cap);
    N_prev = N;
    rec.N_tilde = N;

    // exclusion
    ExclusionStage st;
    st.j = j;
    st.eps_tilde = eps;
    st.K_inv = rec.K_inv;
    st.N_tilde = N;
    const auto surviving = cell_union(cells);
    st.surviving_before = total_length(surviving);
    st.components_before = static_cast<int>(surviving.size());
    std::vector<CellExclusion> ce(cells.size());
    for_cells(static_cast<int>(cells.size()), opt.parallel,
              [&](int i) { ce[i] = exclude_cell(cells[i], freq, N, rec.K_inv, r, opt); });
    st.r = r;
    for (const auto& e : ce) {
      st.raw.insert(st.raw.end(), e.raw.begin(), e.raw.end());
      st.C_over_c = std::max(st.C_over_c, e.C_over_c);
      st.r = std::max(st.r, e.r);
      st.calls += e.calls;
      st.grid_fallbacks += e.fallbacks;
    }
    st.intervals = intersect_intervals(st.raw, surviving);
    st.length_bound = std::pow(eps, 2.0 / (25.0 * r * r));
    st.count_bound = std::pow(2.0, r + d) * std::pow(static_cast<double>(N), d) *
                     (8.0 * st.C_over_c * st.surviving_before + st.components_before);

    std::vector<KamCell> next;
    for (size_t i = 0; i < cells.size(); ++i) {
      const auto pieces = subtract_intervals({{cells[i].a, cells[i].b}}, ce[i].raw);
      if (pieces.size() == 1 && pieces[0].lo == cells[i].a && pieces[0].hi == cells[i].b) {
        next.push_back(std::move(cells[i]));
        continue;
      }
      for (const auto& p : pieces) {
        if (!(p.length() > 0)) continue;
        next.push_back(cells[i].restricted(p.lo, p.hi));
      }
    }
    cells = std::move(next);
    ex.stages.push_back(std::move(st));
    rec.cells_out = static_cast<int>(cells.size());

    // elimination of every k != 0 mode
    const Sector sec = Sector::single(m, N);
    const double tol = 1e-3 * rec.measured_in * std::min(1.0, rec.measured_in);
    std::vector<double> div(cells.size(), kInf), res(cells.size(), 0.0);
    std::vector<int> iters(cells.size(), 0);
    for_cells(static_cast<int>(cells.size()), opt.parallel, [&](int i) {
      KamCell& c = cells[i];
      const int D = static_cast<int>(c.nodes.size());
      auto fy = std::make_shared<ChainFactor>();
      fy->kind = ChainFactor::Kind::exp;
      fy->a = c.a;
      fy->b = c.b;
      for (int t = 0; t < D; ++t) {
        div[i] = std::min(div[i], min_divisor(c.A[t], freq, N));
        auto e = eliminate_nonresonant(c.A[t], c.F[t], sec, freq, h, tol, kam.max_inner, kam.noise_rel, false);
        iters[i] = std::max(iters[i], e.iterations);
        fy->Y.push_back(e.Y + e.Y_lo);
        c.A[t] = std::move(e.A_new);
        c.F[t] = std::move(e.residual);
      }
      c.chain.push_back(fy);
      ++c.stage;
      push_snapshot(c, sch);
      auto& snap = c.snapshots.back();
      snap.h = h1;
      snap.eps = 0.0;
      for (const auto& f : c.F) snap.eps = std::max(snap.eps, norm_h(f, h1));
      std::mt19937_64 rng(kam.seed + 104729u * static_cast<unsigned>(c.stage) + static_cast<unsigned>(1e6 * c.a));
      std::uniform_real_distribution<double> U(0.0, 1.0);
      for (int s = 0; s < kam.residual_samples; ++s) {
        std::vector<double> th(d);
        for (double& x : th) x = U(rng);
        const double lam = c.a + (c.b - c.a) * U(rng);
        res[i] = std::max(res[i], conjugacy_residual(c, fam, c.stage - 1, th, lam));
      }
    });
    rec.min_divisor = kInf;
    for (size_t i = 0; i < cells.size(); ++i) {
      rec.min_divisor = std::min(rec.min_divisor, div[i]);
      rec.residual = std::max(rec.residual, res[i]);
      rec.inner_iters = std::max(rec.inner_iters, iters[i]);
    }
    rec.measured_out = cells_max_norm(cells, h1);
    rec.contraction_ok = rec.measured_out <= rec.eps_next;
    if (!rec.contraction_ok) rec.notes.push_back("|F_{j+1}| above eps_j^kappa");
    rep.contraction_ok = rep.contraction_ok && rec.contraction_ok;
    rep.stages.push_back(rec);
    eps = rec.eps_next;
  }

  // samples
  for (double x : samples) {
    ReducedSample s;
    s.lambda = x;
    s.floor = rep.gap_floor;
    const KamCell* c = find_cell(cells, x);
    if (!c) {
      s.excluded = true;
      rep.samples.push_back(s);
      continue;
    }
    ++rep.surviving;
    s.A_tilde = c->A_family()(x);
    s.gap = min_gap(s.A_tilde);
    s.simple = s.gap > s.floor;
    if (s.simple) ++rep.simple;
    s.F_final = norm_h(c->F_family()(x), c->snapshots.back().h);
    for (int i = 0; i < opt.theta_samples; ++i) {
      std::vector<double> th(d, static_cast<double>(i) / opt.theta_samples);
      if (d > 1)
        for (int t = 1; t < d; ++t) th[t] = std::fmod(th[t] * (t + 1.61803398875), 1.0);
      const Mat B = chain_eval(c->chain, c->chain.size(), th, x);
      s.norm_B = std::max(s.norm_B, opnorm(B));
      s.norm_B_inv = std::max(s.norm_B_inv, opnorm(Mat(B.inverse())));
    }
    Eigen::ComplexEigenSolver<Mat> es(s.A_tilde);
    Mat D = es.eigenvectors();
    for (int k = 0; k < D.cols(); ++k) D.col(k).normalize();
    s.norm_D_inv = opnorm(Mat(D.inverse()));
    rep.samples.push_back(std::move(s));
  }
  out.cells = std::move(cells);
  return out;
}

json to_json(const FullStageRecord& r) {
  json j;
  j["j"] = r.j;
  j["n"] = r.n;
  j["eps_tilde_ln"] = std::log(r.eps_tilde);
  j["eps_next_ln"] = std::log(r.eps_next);
  j["measured_in"] = r.measured_in;
  j["measured_out"] = r.measured_out;
  j["K_inv"] = r.K_inv;
  j["N_tilde"] = r.N_tilde;
  j["cells_in"] = r.cells_in;
  j["cells_out"] = r.cells_out;
  j["min_divisor"] = r.min_divisor;
  j["residual"] = r.residual;
  j["inner_iters"] = r.inner_iters;
  j["contraction_ok"] = r.contraction_ok;
  j["notes"] = r.notes;
  return j;
}

json to_json(const ReducedSample& s) {
  json j;
  j["lambda"] = s.lambda;
  j["excluded"] = s.excluded;
  if (s.excluded) return j;
  j["gap"] = s.gap;
  j["floor"] = s.floor;
  j["simple"] = s.simple;
  j["norm_B"] = s.norm_B;
  j["norm_B_inv"] = s.norm_B_inv;
  j["norm_D_inv"] = s.norm_D_inv;
  j["F_final"] = s.F_final;
  json A = json::array();
  for (int i = 0; i < s.A_tilde.rows(); ++i)
    for (int k = 0; k < s.A_tilde.cols(); ++k) A.push_back({s.A_tilde(i, k).real(), s.A_tilde(i, k).imag()});
  j["A_tilde"] = A;
  return j;
}

json to_json(const ReducibilityReport& r) {
  json j;
  j["start_stage"] = r.start_stage;
  j["r_tilde"] = r.r_tilde;
  j["m"] = r.m;
  j["eps1"] = r.eps1;
  j["gap_floor"] = r.gap_floor;
  j["stages"] = json::array();
  for (const auto& s : r.stages) j["stages"].push_back(to_json(s));
  j["samples"] = json::array();
  for (const auto& s : r.samples) j["samples"].push_back(to_json(s));
  j["surviving"] = r.surviving;
  j["simple"] = r.simple;
  j["simple_fraction"] = r.simple_fraction();
  j["contraction_ok"] = r.contraction_ok;
  return j;
}

json to_json(const FullMeasure& f, const std::vector<double>& rhos) {
  json j;
  j["report"] = to_json(f.report);
  j["exclusions"] = to_json(f.exclusions, rhos);
  j["cells"] = f.cells.size();
  return j;
}

}  // namespace qpkam
