#include "qpkam/run.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "qpkam/full_measure.hpp"
#include "qpkam/lyapunov.hpp"
#include "qpkam/resonance.hpp"
#include "qpkam/serialize.hpp"
#include "qpkam/spectral.hpp"

namespace qpkam {

namespace {

const std::pair<Command, const char*> kCommands[] = {
    {Command::reduce, "reduce"},         {Command::ids, "ids"},
    {Command::lyapunov, "lyapunov"},     {Command::thouless, "thouless"},
    {Command::transversality, "transversality"}, {Command::resonances, "resonances"},
    {Command::full_pipeline, "full-pipeline"},
};

[[noreturn]] void schema(const std::string& what, json w = json::object()) {
  throw Error(ErrorKind::Schema, what, std::move(w));
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) schema(where + " must be an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) schema("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

cplx read_complex(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  schema("coefficient must be a number or a [re, im] pair", v);
}

std::vector<double> named_frequency(const std::string& name) {
  if (name == "golden") return {(std::sqrt(5.0) - 1.0) / 2.0};
  if (name == "silver") return {std::sqrt(2.0) - 1.0};
  if (name == "cubic") return {std::cbrt(2.0) - 1.0, std::cbrt(4.0) - 1.0};
  schema("unknown named frequency '" + name + "'");
}

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1);
  return g;
}

std::vector<double> midpoints(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * (i + 0.5) / n;
  return g;
}

class Csv {
 public:
  Csv(const std::filesystem::path& p, const std::vector<std::string>& header) : f_(p) {
    if (!f_) throw Error(ErrorKind::Domain, "cannot write " + p.string());
    f_ << std::setprecision(17);
    for (size_t i = 0; i < header.size(); ++i) f_ << (i ? "," : "") << header[i];
    f_ << "\n";
  }
  template <class... T>
  void row(const T&... v) {
    int i = 0;
    ((f_ << (i++ ? "," : "") << v), ...);
    f_ << "\n";
  }

 private:
  std::ofstream f_;
};

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::Domain, "cannot write " + p.string());
  f << j.dump(2) << "\n";
}

struct Context {
  const RunConfig& cfg;
  std::filesystem::path dir;
  Frequency freq;
  json results = json::object();
  std::vector<Assertion> checks;
  std::vector<std::string> files;

  Context(const RunConfig& c, std::filesystem::path d) : cfg(c), dir(std::move(d)) {}
  void check(const std::string& name, bool pass, double value, double bound, json witness = json::object()) {
    checks.push_back({name, pass, value, bound, std::move(witness)});
  }
  Csv csv(const std::string& name, const std::vector<std::string>& header) {
    files.push_back(name);
    return Csv(dir / name, header);
  }
};

LyapunovOptions lyap_options(const RunConfig& c) {
  LyapunovOptions o;
  o.n = c.lyap_n;
  o.theta_samples = c.lyap_phases;
  return o;
}

IdsCurve dual_ids(Context& ctx) {
  const auto& c = ctx.cfg;
  LongRangeOperator op;
  op.kind = OperatorKind::dual_1d;
  op.V = c.V;
  op.W = c.W;
  op.eps = c.eps;
  op.freq = ctx.freq;
  return ids(op, grid(c.E_min, c.E_max, c.ids_points), c.n_trunc, c.phases, c.boundary);
}

void run_ids(Context& ctx, const IdsCurve& curve) {
  const auto& c = ctx.cfg;
  auto out = ctx.csv("ids.csv", {"E", "N"});
  double worst_step = 0.0, lo = 1.0, hi = 0.0;
  for (size_t i = 0; i < curve.E_grid.size(); ++i) {
    out.row(curve.E_grid[i], curve.N_values[i]);
    if (i) worst_step = std::min(worst_step, curve.N_values[i] - curve.N_values[i - 1]);
    lo = std::min(lo, curve.N_values[i]);
    hi = std::max(hi, curve.N_values[i]);
  }
  ctx.check("ids_monotone", worst_step >= 0.0, worst_step, 0.0);
  ctx.check("ids_range", lo >= 0.0 && hi <= 1.0, hi, 1.0);
  json r = {{"truncation_size", curve.truncation_size},
            {"boundary", boundary_name(curve.boundary)},
            {"points", curve.E_grid.size()}};
  const bool free_case = c.eps == 0.0 && c.V.ell == 1 && std::abs(c.V.coef(1) - 1.0) < 1e-15 &&
                         std::abs(c.V.coef(0)) < 1e-15;
  if (free_case) {
    double err = 0.0;
    for (size_t i = 0; i < curve.E_grid.size(); ++i)
      if (std::abs(curve.E_grid[i]) <= 1.9) err = std::max(err, std::abs(curve.N_values[i] - free_ids(curve.E_grid[i])));
    r["free_sup_error"] = err;
    ctx.check("ids_free_closed_form", err <= 2.0 / c.n_trunc, err, 2.0 / c.n_trunc);
  }
  if (curve.E_grid.size() >= 1000) {
    const auto h = holder_estimate(curve, c.V.ell);
    r["holder"] = {{"exponent", h.exponent}, {"threshold", h.threshold}, {"pass", h.pass}};
  }
  ctx.results["ids"] = r;
}

void run_lyapunov(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto E = grid(c.E_min, c.E_max, c.E_points);
  const int m = 2 * c.V.ell;
  std::vector<std::string> header{"E"};
  for (int i = 1; i <= m; ++i) header.push_back("gamma_" + std::to_string(i));
  header.push_back("sum");
  auto out = ctx.csv("lyapunov.csv", header);
  double worst = 0.0, at = 0.0;
  for (double e : E) {
    const auto g = lyapunov_exponents(companion_cocycle(c.V, c.W, c.eps, cplx(e, 0.0), ctx.freq), lyap_options(c));
    std::ostringstream line;
    line << std::setprecision(17) << e;
    double s = 0.0;
    for (double x : g) {
      line << "," << x;
      s += x;
    }
    line << "," << s;
    out.row(line.str());
    if (std::abs(s) > worst) worst = std::abs(s), at = e;
  }
  ctx.results["lyapunov"] = {{"max_abs_sum", worst}, {"at", at}, {"n", c.lyap_n}};
  ctx.check("lyapunov_pairing", worst < c.pairing_tol, worst, c.pairing_tol, {{"E", at}});
}

void run_thouless(Context& ctx, const IdsCurve& curve) {
  const auto& c = ctx.cfg;
  const auto E = grid(c.E_min, c.E_max, c.E_points);
  const auto t = thouless_check(curve, c.V, c.W, c.eps, ctx.freq, E, lyap_options(c));
  auto out = ctx.csv("thouless.csv", {"E", "gamma", "potential", "thouless_residual"});
  for (size_t i = 0; i < t.E.size(); ++i) out.row(t.E[i], t.gamma[i], t.potential[i], t.residual[i]);
  ctx.results["thouless"] = {{"max_abs_residual", t.max_abs()}, {"truncation_size", curve.truncation_size}};
  if (c.eps == 0.0) ctx.check("thouless_free", t.max_abs() < c.thouless_tol, t.max_abs(), c.thouless_tol);
}

NondegeneracyReport certify(Context& ctx) {
  const auto& c = ctx.cfg;
  return nondegeneracy_certify(c.V, c.E_min - c.cert_margin, c.E_max + c.cert_margin);
}

void run_transversality(Context& ctx) {
  const auto nd = certify(ctx);
  ctx.results["transversality"] = to_json(nd);
  ctx.check("finite_roots", nd.finite_ok, nd.finite.size(), 0.0);
}

void run_resonances(Context& ctx) {
  const auto& c = ctx.cfg;
  auto out = ctx.csv("resonances.csv", {"E", "i", "j", "k", "defect", "unique"});
  long total = 0;
  for (double e : grid(c.E_min, c.E_max, c.E_points)) {
    Eigen::ComplexEigenSolver<Mat> es(companion_matrix(c.V, cplx(e, 0.0)));
    std::vector<cplx> vals(es.eigenvalues().begin(), es.eigenvalues().end());
    const auto dec = maximal_separated_decomposition(vals, c.cluster_mu);
    for (const auto& p : find_resonances(dec, ctx.freq, c.resonance_N, c.resonance_sigma)) {
      std::ostringstream k;
      for (size_t i = 0; i < p.k.size(); ++i) k << (i ? " " : "") << p.k[i];
      out.row(e, p.i, p.j, k.str(), p.defect, p.unique ? 1 : 0);
      ++total;
    }
  }
  ctx.results["resonances"] = {{"pairs", total}, {"N", c.resonance_N}, {"sigma", c.resonance_sigma}};
}

struct Reduction {
  CocycleFamily fam;
  KamOptions opt;
  KamRun run;
};

Reduction run_reduce(Context& ctx) {
  const auto& c = ctx.cfg;
  if (!(c.eps > 0.0)) schema("reduce needs eps > 0");
  Reduction red;
  red.fam = companion_family(c.V, c.W, c.eps, ctx.freq);
  const auto nd = certify(ctx);
  auto& opt = red.opt;
  opt.schedule.mode = c.mode;
  opt.schedule.m = red.fam.m;
  opt.schedule.d = ctx.freq.d();
  opt.schedule.gamma = ctx.freq.gamma;
  opt.schedule.tau = ctx.freq.tau;
  opt.schedule.ln_eps = std::log(c.eps);
  opt.schedule.C_d = c.C_d;
  opt.nu_prime = c.nu_prime;
  opt.degree = c.kam_degree;
  opt.seed = c.seed;
  red.run = run_kam(red.fam, c.E_min, c.E_max, nd.cert, c.stages, opt);
  const auto& cells = red.run.cells;

  auto out = ctx.csv("reduce_stages.csv", {"E", "cell_a", "cell_b", "excluded", "n", "F_norm"});
  const bool paper = c.mode == ScheduleMode::paper;
  int excluded = 0, checked = 0;
  double worst = -HUGE_VAL;
  json worst_at;
  for (double e : midpoints(c.E_min, c.E_max, c.E_points)) {
    const KamCell* cell = find_cell(cells, e);
    if (!cell || cell->excluded) {
      ++excluded;
      out.row(e, cell ? cell->a : e, cell ? cell->b : e, 1, 0, 0.0);
      continue;
    }
    std::vector<double> F;
    for (size_t s = 0; s < cell->snapshots.size(); ++s) {
      F.push_back(stage_norm(*cell, static_cast<int>(s), e));
      out.row(e, cell->a, cell->b, 0, s + 1, F.back());
    }
    for (size_t s = 0; s + 1 < F.size(); ++s) {
      ++checked;
      // margin in log space: ln F_{n+1} - p ln F_n, or ln F_{n+1} - ln F_n in paper mode
      const double p = paper ? 1.0 : c.contraction_exponent;
      const double margin = F[s + 1] == 0.0 ? -HUGE_VAL : std::log(F[s + 1]) - p * std::log(F[s]);
      if (margin > worst) worst = margin, worst_at = {{"E", e}, {"n", s + 1}, {"F", {F[s], F[s + 1]}}};
    }
  }
  ctx.check(paper ? "kam_decreasing" : "kam_contraction", checked > 0 && worst <= 0.0, worst, 0.0, worst_at);

  std::vector<const KamCell*> live;
  double live_len = 0.0;
  for (const auto& cell : cells)
    if (!cell.excluded) live.push_back(&cell), live_len += cell.b - cell.a;
  double worst_res = 0.0;
  json res_at;
  std::vector<double> per_stage;
  if (!live.empty()) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s <= c.stages; ++s) {
      double ws = 0.0;
      for (int i = 0; i < c.residual_samples; ++i) {
        double pick = U(rng) * live_len;
        const KamCell* cell = live.back();
        for (const auto* q : live) {
          if (pick <= q->b - q->a) {
            cell = q;
            break;
          }
          pick -= q->b - q->a;
        }
        std::vector<double> th(ctx.freq.d());
        for (double& x : th) x = U(rng);
        const double lam = cell->a + (cell->b - cell->a) * U(rng);
        const int idx = std::min<int>(s, static_cast<int>(cell->snapshots.size()) - 1);
        const double r = conjugacy_residual(*cell, red.fam, idx, th, lam);
        ws = std::max(ws, r);
        if (r > worst_res) worst_res = r, res_at = {{"stage", s + 1}, {"theta", th}, {"lambda", lam}};
      }
      per_stage.push_back(ws);
    }
  }
  ctx.check("conjugacy_residual", !live.empty() && worst_res < c.residual_tol, worst_res, c.residual_tol, res_at);

  double excl_len = 0.0;
  for (const auto& cell : cells)
    if (cell.excluded) excl_len += cell.b - cell.a;
  ctx.results["reduce"] = {{"kam", red.run.manifest},
                           {"certificate", to_json(nd)},
                           {"samples", c.E_points},
                           {"excluded_samples", excluded},
                           {"excluded_length", excl_len},
                           {"worst_contraction_margin_ln", worst},
                           {"residual_per_stage", per_stage}};
  return red;
}

void run_full_measure(Context& ctx, const Reduction& red, int stages, std::vector<ReducibleSample>* reducible) {
  const auto& c = ctx.cfg;
  FullMeasureOptions fo;
  fo.stages = stages;
  const auto fm = reduce_full_measure(red.run, red.fam, red.opt, midpoints(c.E_min, c.E_max, c.fm_samples), fo);
  const auto& rep = fm.report;
  auto out = ctx.csv("full_measure_samples.csv",
                     {"E", "excluded", "gap", "floor", "simple", "norm_B", "norm_B_inv", "norm_D_inv", "F_final"});
  for (const auto& s : rep.samples) {
    out.row(s.lambda, s.excluded ? 1 : 0, s.gap, s.floor, s.simple ? 1 : 0, s.norm_B, s.norm_B_inv, s.norm_D_inv,
            s.F_final);
    if (reducible && !s.excluded) reducible->push_back({s.lambda, s.norm_B, s.norm_B_inv, s.norm_D_inv});
  }
  auto st = ctx.csv("exclusion_stages.csv", {"j", "N_tilde", "K_inv", "raw_count", "count_bound", "max_raw_length",
                                             "length_bound", "excluded_length", "rho_1", "rho_0.5"});
  bool bounds = true;
  for (const auto& s : fm.exclusions.stages) {
    st.row(s.j, s.N_tilde, s.K_inv, s.raw.size(), s.count_bound, s.max_raw_length(), s.length_bound,
           total_length(s.intervals), s.rho(1.0), s.rho(0.5));
    bounds = bounds && s.length_ok() && s.count_ok();
  }
  const auto rho = fm.exclusions.stage_rho(0.5);
  bool decreasing = rho.size() >= 2;
  for (size_t i = 1; i < rho.size(); ++i) decreasing = decreasing && rho[i] < rho[i - 1];
  ctx.results["full_measure"] = to_json(fm, fo.rhos);
  ctx.check("full_measure_contraction", rep.contraction_ok, rep.contraction_ok, 1.0);
  ctx.check("simple_endpoint", rep.surviving > 0 && rep.simple_fraction() >= c.simple_fraction,
            rep.simple_fraction(), c.simple_fraction, {{"surviving", rep.surviving}, {"simple", rep.simple}});
  ctx.check("exclusion_bounds", bounds, bounds, 1.0);
  ctx.check("rho_half_decreasing", decreasing, rho.empty() ? 0.0 : rho.back(), rho.empty() ? 0.0 : rho.front(),
            {{"stage_rho_0.5", rho}});
}

void run_pipeline(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto red = run_reduce(ctx);
  std::vector<ReducibleSample> reducible;
  run_full_measure(ctx, red, c.fm_stages > 0 ? c.fm_stages : 4, &reducible);
  const auto curve = dual_ids(ctx);
  run_ids(ctx, curve);
  if (ctx.results["ids"].contains("holder")) {
    const auto& h = ctx.results["ids"]["holder"];
    ctx.check("holder_exponent", h["pass"].get<bool>(), h["exponent"].get<double>(), h["threshold"].get<double>());
  }
  run_lyapunov(ctx);
  run_thouless(ctx, curve);
  if (ctx.freq.d() == 1) {
    const auto dc = duality_check(c.V, c.W, c.eps, ctx.freq, grid(c.E_min, c.E_max, c.E_points), c.n_trunc,
                                  c.phases, c.boundary);
    auto out = ctx.csv("duality.csv", {"E", "N_dual", "N_primal"});
    for (size_t i = 0; i < dc.dual.E_grid.size(); ++i) out.row(dc.dual.E_grid[i], dc.dual.N_values[i], dc.primal.N_values[i]);
    ctx.results["duality"] = {{"sup_diff", dc.sup_diff}};
  }
  // local Lipschitz chain on a thinned set of reducible energies
  std::vector<ReducibleSample> thin;
  const size_t stride = std::max<size_t>(1, reducible.size() / 10);
  for (size_t i = 0; i < reducible.size(); i += stride) thin.push_back(reducible[i]);
  const auto lip = lipschitz_diagnostic(c.V, c.W, c.eps, ctx.freq, curve, thin, {2e-2, 1e-2, 5e-3}, lyap_options(c));
  auto out = ctx.csv("lipschitz.csv", {"E", "local_lipschitz", "bound", "chain_ok"});
  json lj = json::array();
  for (const auto& r : lip) {
    out.row(r.E, r.lipschitz, r.lipschitz_bound, r.chain_ok ? 1 : 0);
    lj.push_back(to_json(r));
  }
  ctx.results["lipschitz"] = lj;
}

}  // namespace

Command command_from(const std::string& s) {
  for (const auto& [c, n] : kCommands)
    if (s == n) return c;
  schema("unknown command '" + s + "'");
}

const char* command_name(Command c) {
  for (const auto& [k, n] : kCommands)
    if (k == c) return n;
  return "?";
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    allow_keys(j, "config", {"command", "frequency", "diophantine_k", "potential", "W", "eps", "grid", "schedule",
                             "full_measure", "truncation", "lyapunov", "thouless", "resonances", "transversality",
                             "seed", "jobs", "out"});
    if (!j.contains("command")) schema("missing 'command'");
    c.command = command_from(j.at("command").get<std::string>());
    read(j, "diophantine_k", c.diophantine_k);
    if (j.contains("frequency")) {
      const auto& f = j.at("frequency");
      if (f.is_string()) {
        c.frequency_name = f.get<std::string>();
        c.alpha = named_frequency(c.frequency_name);
      } else {
        c.alpha = f.get<std::vector<double>>();
        if (c.alpha.empty()) schema("frequency vector is empty");
      }
    } else {
      c.frequency_name = "golden";
      c.alpha = named_frequency("golden");
    }
    const int d = static_cast<int>(c.alpha.size());
    if (j.contains("potential")) {
      const auto& p = j.at("potential");
      if (p.is_string()) {
        if (p.get<std::string>() != "cos") schema("unknown named potential '" + p.get<std::string>() + "'");
        c.V = TrigPotential::cosine();
      } else {
        if (!p.is_array() || p.size() < 3 || p.size() % 2 == 0) schema("potential needs 2 ell + 1 coefficients");
        std::vector<cplx> v;
        for (const auto& x : p) v.push_back(read_complex(x));
        try {
          c.V = TrigPotential::from(v);
        } catch (const Error& e) {
          schema(e.what());
        }
      }
    }
    c.W = cosine_W(d);
    if (j.contains("W")) {
      const auto& w = j.at("W");
      if (w.is_string()) {
        if (w.get<std::string>() != "cos") schema("unknown named W '" + w.get<std::string>() + "'");
      } else {
        if (!w.is_array() || w.empty()) schema("W must be 'cos' or a list of {k, value}");
        c.W = TorusMatrix(1, d);
        for (const auto& t : w) {
          allow_keys(t, "W entry", {"k", "value"});
          auto k = t.at("k").get<MultiIndex>();
          if (static_cast<int>(k.size()) != d) schema("W mode dimension differs from the frequency");
          c.W.at(k) = Mat::Constant(1, 1, read_complex(t.at("value")));
        }
      }
    }
    read(j, "eps", c.eps);
    if (!(c.eps >= 0.0)) schema("eps must be >= 0");
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      allow_keys(g, "grid", {"min", "max", "points"});
      read(g, "min", c.E_min);
      read(g, "max", c.E_max);
      read(g, "points", c.E_points);
    }
    if (!(c.E_min < c.E_max) || c.E_points < 1) schema("grid needs min < max and points >= 1");
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      allow_keys(s, "schedule", {"mode", "stages", "nu_prime", "C_d", "degree", "contraction_exponent",
                                 "residual_samples", "residual_tol"});
      if (s.contains("mode")) {
        const auto m = s.at("mode").get<std::string>();
        if (m != "paper" && m != "practical") schema("schedule.mode must be paper or practical");
        c.mode = schedule_mode_from(m);
      }
      read(s, "stages", c.stages);
      read(s, "nu_prime", c.nu_prime);
      read(s, "C_d", c.C_d);
      read(s, "degree", c.kam_degree);
      read(s, "contraction_exponent", c.contraction_exponent);
      read(s, "residual_samples", c.residual_samples);
      read(s, "residual_tol", c.residual_tol);
    }
    if (c.stages < 1 || c.kam_degree < 4 || c.residual_samples < 1) schema("schedule values out of range");
    if (j.contains("full_measure")) {
      const auto& f = j.at("full_measure");
      allow_keys(f, "full_measure", {"stages", "samples", "simple_fraction"});
      read(f, "stages", c.fm_stages);
      read(f, "samples", c.fm_samples);
      read(f, "simple_fraction", c.simple_fraction);
    }
    if (c.fm_stages < 0 || c.fm_samples < 1) schema("full_measure values out of range");
    if (j.contains("truncation")) {
      const auto& t = j.at("truncation");
      allow_keys(t, "truncation", {"n", "phases", "boundary", "ids_points"});
      read(t, "n", c.n_trunc);
      read(t, "phases", c.phases);
      read(t, "ids_points", c.ids_points);
      if (t.contains("boundary")) {
        const auto b = t.at("boundary").get<std::string>();
        if (b != "dirichlet" && b != "periodic") schema("truncation.boundary must be dirichlet or periodic");
        c.boundary = boundary_from(b);
      }
    }
    if (c.n_trunc < 2 || c.phases < 1 || c.ids_points < 2) schema("truncation values out of range");
    if (j.contains("lyapunov")) {
      const auto& l = j.at("lyapunov");
      allow_keys(l, "lyapunov", {"n", "phases", "pairing_tol"});
      read(l, "n", c.lyap_n);
      read(l, "phases", c.lyap_phases);
      read(l, "pairing_tol", c.pairing_tol);
    }
    if (c.lyap_n < 1 || c.lyap_phases < 1) schema("lyapunov values out of range");
    if (j.contains("thouless")) {
      allow_keys(j.at("thouless"), "thouless", {"tolerance"});
      read(j.at("thouless"), "tolerance", c.thouless_tol);
    }
    if (j.contains("resonances")) {
      const auto& r = j.at("resonances");
      allow_keys(r, "resonances", {"N", "sigma", "mu"});
      read(r, "N", c.resonance_N);
      read(r, "sigma", c.resonance_sigma);
      read(r, "mu", c.cluster_mu);
    }
    if (j.contains("transversality")) {
      allow_keys(j.at("transversality"), "transversality", {"margin"});
      read(j.at("transversality"), "margin", c.cert_margin);
    }
    read(j, "seed", c.seed);
    read(j, "jobs", c.jobs);
    read(j, "out", c.out);
    if (c.jobs < 0) schema("jobs must be >= 0");
  } catch (const json::exception& e) {
    schema(std::string("type error: ") + e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  json W = json::array();
  for (const auto& [k, v] : c.W.coeffs()) W.push_back({{"k", k}, {"value", {v(0, 0).real(), v(0, 0).imag()}}});
  json f = c.frequency_name.empty() ? json(c.alpha) : json(c.frequency_name);
  return {{"command", command_name(c.command)},
          {"frequency", f},
          {"diophantine_k", c.diophantine_k},
          {"potential", to_json(c.V)["V_hat"]},
          {"W", W},
          {"eps", c.eps},
          {"grid", {{"min", c.E_min}, {"max", c.E_max}, {"points", c.E_points}}},
          {"schedule",
           {{"mode", schedule_mode_name(c.mode)},
            {"stages", c.stages},
            {"nu_prime", c.nu_prime},
            {"C_d", c.C_d},
            {"degree", c.kam_degree},
            {"contraction_exponent", c.contraction_exponent},
            {"residual_samples", c.residual_samples},
            {"residual_tol", c.residual_tol}}},
          {"full_measure", {{"stages", c.fm_stages}, {"samples", c.fm_samples}, {"simple_fraction", c.simple_fraction}}},
          {"truncation",
           {{"n", c.n_trunc}, {"phases", c.phases}, {"boundary", boundary_name(c.boundary)}, {"ids_points", c.ids_points}}},
          {"lyapunov", {{"n", c.lyap_n}, {"phases", c.lyap_phases}, {"pairing_tol", c.pairing_tol}}},
          {"thouless", {{"tolerance", c.thouless_tol}}},
          {"resonances", {{"N", c.resonance_N}, {"sigma", c.resonance_sigma}, {"mu", c.cluster_mu}}},
          {"transversality", {{"margin", c.cert_margin}}},
          {"seed", c.seed},
          {"out", c.out}};
}

RunResult run(const RunConfig& cfg) {
  RunResult res;
  Context ctx{cfg, cfg.out};
  std::filesystem::create_directories(ctx.dir);
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
  json& man = res.manifest;
  man["schema_version"] = kSchemaVersion;
  man["command"] = command_name(cfg.command);
  man["config"] = to_json(cfg);
  json witness;
  try {
    ctx.freq = Frequency::certify(cfg.alpha, cfg.diophantine_k);
    man["frequency"] = to_json(ctx.freq);
    switch (cfg.command) {
      case Command::reduce: {
        const auto red = run_reduce(ctx);
        if (cfg.fm_stages > 0) run_full_measure(ctx, red, cfg.fm_stages, nullptr);
        break;
      }
      case Command::ids: run_ids(ctx, dual_ids(ctx)); break;
      case Command::lyapunov: run_lyapunov(ctx); break;
      case Command::thouless: run_thouless(ctx, dual_ids(ctx)); break;
      case Command::transversality: run_transversality(ctx); break;
      case Command::resonances: run_resonances(ctx); break;
      case Command::full_pipeline: run_pipeline(ctx); break;
    }
    res.exit_code = 0;
    for (const auto& a : ctx.checks)
      if (!a.pass) {
        res.exit_code = 1;
        witness["failed"].push_back({{"name", a.name}, {"value", a.value}, {"bound", a.bound}, {"witness", a.witness}});
      }
    man["status"] = res.exit_code ? "assertion-failed" : "ok";
  } catch (const Error& e) {
    const bool input = e.kind() == ErrorKind::Schema || e.kind() == ErrorKind::Diophantine;
    res.exit_code = input ? 2 : 1;
    man["status"] = input ? "invalid-input" : "error";
    man["error"] = {{"kind", kind_name(e.kind())}, {"message", e.what()}};
    witness["error"] = {{"kind", kind_name(e.kind())}, {"message", e.what()}, {"witness", e.witness()}};
  }
  man["results"] = ctx.results;
  json checks = json::array();
  for (const auto& a : ctx.checks)
    checks.push_back({{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"bound", a.bound}});
  man["assertions"] = checks;
  if (!witness.is_null()) {
    write_json(ctx.dir / "witness.json", witness);
    ctx.files.push_back("witness.json");
  }
  man["files"] = ctx.files;
  write_json(ctx.dir / "manifest.json", man);
  res.assertions = std::move(ctx.checks);
  return res;
}

}  // namespace qpkam
