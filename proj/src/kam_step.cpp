#include <algorithm>
#include <deque>
#include <exception>
#include <numeric>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qpkam/kam.hpp"
#include "qpkam/poly.hpp"

namespace qpkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxRadius = 512;

template <class Fn>
void for_nodes(int n, bool parallel, Fn&& f) {
  std::vector<std::exception_ptr> errs(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

Decomposition block_decomposition(const Mat& A, const std::vector<int>& sizes) {
  Decomposition d;
  std::vector<std::vector<cplx>> sets;
  int off = 0;
  for (int s : sizes) {
    auto ev = eigenvalues(A.block(off, off, s, s));
    std::vector<int> idx;
    for (cplx z : ev) {
      idx.push_back(static_cast<int>(d.values.size()));
      d.values.push_back(z);
    }
    d.clusters.push_back(std::move(idx));
    sets.push_back(std::move(ev));
    off += s;
  }
  d.nu = kInf;
  for (size_t i = 0; i < sets.size(); ++i) {
    d.zeta = std::max(d.zeta, diameter(sets[i]));
    for (size_t j = i + 1; j < sets.size(); ++j) d.nu = std::min(d.nu, set_distance(sets[i], sets[j]));
  }
  return d;
}

void drop_zeros(TorusMatrix& f) {
  for (auto it = f.coeffs().begin(); it != f.coeffs().end();) {
    if (it->second.size() == 0 || it->second.cwiseAbs().maxCoeff() == 0.0)
      it = f.coeffs().erase(it);
    else
      ++it;
  }
}

Mat& slot(TorusMatrix& f, const MultiIndex& k) {
  Mat& M = f.at(k);
  if (M.size() == 0) M = Mat::Zero(f.m(), f.m());
  return M;
}

// Solves P X - X Q = C.
Mat sylvester(const Mat& P, const Mat& Q, const Mat& C) {
  const int p = static_cast<int>(P.rows()), q = static_cast<int>(Q.rows());
  Mat L = Eigen::kroneckerProduct(Mat::Identity(q, q), P).eval();
  L -= Eigen::kroneckerProduct(Q.transpose(), Mat::Identity(p, p)).eval();
  Eigen::Map<const Vec> c(C.data(), p * q);
  Vec x = Eigen::PartialPivLU<Mat>(L).solve(c);
  if (!x.allFinite()) throw Error(ErrorKind::NearSingular, "Sylvester operator singular");
  return Eigen::Map<Mat>(x.data(), p, q);
}

Elimination eliminate_with(const HomologicalSolver& solver, const Mat& A, const TorusMatrix& F, const Sector& s,
                           const Frequency& freq, double h, double tol, int max_inner, double noise_rel) {
  const int m = static_cast<int>(A.rows()), d = freq.d();
  const int radius = std::min(kMaxRadius, F.max_mode() + 2 * s.N);
  Elimination out;
  TorusMatrix Q_used(m, d, F.h_nominal()), Q;
  auto sol = solver.solve(project(F, s) * cplx(-1.0));
  double prev = kInf;
  while (true) {
    Q = conjugation_remainder(A, F, sol.Y + sol.Y_lo, freq, radius);
    Q.drop_small(noise_rel);
    ++out.iterations;
    const double change = norm_h(project(Q - Q_used, s), h);
    if (change <= tol || out.iterations >= max_inner || change >= 0.9 * prev) break;
    prev = change;
    sol = solver.solve(project(F + Q, s) * cplx(-1.0));
    Q_used = Q;
  }
  TorusMatrix G = sol.residual + project(Q - Q_used, s) + project_out(F + Q, s);
  out.retained_norm = norm_h(project(G, s), h);
  out.Y = sol.Y;
  out.Y_lo = sol.Y_lo;

  const auto off = block_offsets(s.sizes);
  const int l = s.blocks();
  out.A_new = A;
  out.f_re = TorusMatrix(m, d, F.h_nominal());
  out.residual = TorusMatrix(m, d, F.h_nominal());
  for (const auto& [k, C] : G.coeffs()) {
    Mat rest = C;
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j) {
        auto blk = [&](Mat& M) { return M.block(off[i], off[j], s.sizes[i], s.sizes[j]); };
        if (i == j && is_zero(k)) {
          blk(out.A_new) += blk(rest);
          blk(rest).setZero();
        } else if (s.resonant(i, j, k)) {
          blk(slot(out.f_re, k)) = blk(rest);
          blk(rest).setZero();
        }
      }
    if (rest.cwiseAbs().maxCoeff() > 0.0) out.residual.coeffs().emplace(k, std::move(rest));
  }
  return out;
}

// Splits blocks whose eigenvalues separate at 8 nu at lambda0, tracking clusters node to node.
// Returns false when nothing splits; otherwise S per node and the new sizes.
bool refine_blocks(const KamCell& c, double nu, std::vector<Mat>& S, std::vector<int>& sizes) {
  const int D = static_cast<int>(c.nodes.size()), mid = c.mid(), m = static_cast<int>(c.A[0].rows());
  const auto off = block_offsets(c.sizes);
  S.assign(D, Mat::Identity(m, m));
  sizes.clear();
  bool any = false;
  for (size_t i = 0; i < c.sizes.size(); ++i) {
    const int s = c.sizes[i];
    auto block = [&](int t) { return Mat(c.A[t].block(off[i], off[i], s, s)); };
    if (s < 2) {
      sizes.push_back(s);
      continue;
    }
    const auto dec = maximal_separated_decomposition(eigenvalues(block(mid)), 8.0 * nu);
    const int l = dec.size();
    if (l < 2) {
      sizes.push_back(s);
      continue;
    }
    std::vector<std::vector<std::vector<cplx>>> ref(D);
    for (int q = 0; q < l; ++q) ref[mid].push_back(dec.cluster_values(q));
    bool ok = true;
    for (int dir : {1, -1}) {
      for (int t = mid + dir; ok && t >= 0 && t < D; t += dir) {
        const auto& prev = ref[t - dir];
        double cross = kInf;
        for (int p = 0; p < l; ++p)
          for (int q = p + 1; q < l; ++q) cross = std::min(cross, set_distance(prev[p], prev[q]));
        if (!(cross > 4.0 * nu)) {
          ok = false;
          break;
        }
        const auto vals = eigenvalues(block(t));
        const auto lab = assign_to_clusters(vals, prev, 0.5 * cross);
        std::vector<std::vector<cplx>> cur(l);
        for (size_t v = 0; v < vals.size(); ++v) {
          if (lab[v] < 0) {
            ok = false;
            break;
          }
          cur[lab[v]].push_back(vals[v]);
        }
        for (int q = 0; ok && q < l; ++q) ok = cur[q].size() == prev[q].size();
        ref[t] = std::move(cur);
      }
    }
    if (!ok) {
      sizes.push_back(s);
      continue;
    }
    std::vector<BlockSplit> splits(D);
    for (int t = 0; t < D; ++t) {
      const auto& r = ref[t];
      auto nearest = [&](cplx z) {
        int best = -1;
        double bd = kInf;
        for (int q = 0; q < l; ++q) {
          const double dz = set_distance({z}, r[q]);
          if (dz < bd) bd = dz, best = q;
        }
        return best;
      };
      splits[t] = block_split(block(t), nearest, l);
    }
    const auto& sub_sizes = splits[mid].sizes;
    std::vector<int> so(l + 1, 0);
    for (int q = 0; q < l; ++q) so[q + 1] = so[q] + sub_sizes[q];
    for (int t = 0; t < D; ++t) {
      if (splits[t].sizes != sub_sizes) return false;
      const Mat Sinv = splits[t].S.inverse();
      Mat St(s, s);
      for (int q = 0; q < l; ++q) {
        const Mat P = splits[t].S.middleCols(so[q], sub_sizes[q]) * Sinv.middleRows(so[q], sub_sizes[q]);
        St.middleCols(so[q], sub_sizes[q]) = P * splits[mid].S.middleCols(so[q], sub_sizes[q]);
      }
      S[t].block(off[i], off[i], s, s) = St;
    }
    sizes.insert(sizes.end(), sub_sizes.begin(), sub_sizes.end());
    any = true;
  }
  return any;
}

void apply_constant(KamCell& c, const std::vector<Mat>& S, const std::vector<int>& sizes) {
  auto f = std::make_shared<ChainFactor>();
  f->kind = ChainFactor::Kind::constant;
  f->a = c.a;
  f->b = c.b;
  f->S = S;
  c.chain.push_back(f);
  for (size_t t = 0; t < c.A.size(); ++t) {
    const Mat& St = S.size() == 1 ? S[0] : S[t];
    const Mat Sinv = St.inverse();
    c.A[t] = block_diag(diag_blocks(Sinv * c.A[t] * St, sizes));
    c.F[t] = c.F[t].conj_by(St, Sinv);
    drop_zeros(c.F[t]);
  }
  c.sizes = sizes;
}

}  // namespace

void push_snapshot(KamCell& c, const KamSchedule& s) {
  StageSnapshot snap;
  snap.n = c.stage;
  snap.h = s.h(c.stage);
  for (const auto& f : c.F) snap.eps = std::max(snap.eps, norm_h(f, snap.h));
  snap.A = std::make_shared<const MatFamily>(c.A_family());
  snap.F = std::make_shared<const ChebFamily<TorusMatrix>>(c.F_family());
  snap.chain_len = c.chain.size();
  snap.sizes = c.sizes;
  c.snapshots.push_back(std::move(snap));
}

Mat ChainFactor::eval(const std::vector<double>& theta, double lambda) const {
  switch (kind) {
    case Kind::exp: {
      std::vector<Mat> v;
      v.reserve(Y.size());
      for (const auto& y : Y) v.push_back(y.eval(theta).exp());
      return v.size() == 1 ? v[0] : MatFamily(a, b, std::move(v))(lambda);
    }
    case Kind::phase:
      return phase_matrix(sizes, kappa, theta);
    case Kind::constant:
      return S.size() == 1 ? S[0] : MatFamily(a, b, S)(lambda);
  }
  return {};
}

Mat chain_eval(const Chain& c, std::size_t len, const std::vector<double>& theta, double lambda) {
  if (len == 0 || c.empty()) throw Error(ErrorKind::Domain, "empty conjugation chain");
  Mat B = c[0]->eval(theta, lambda);
  for (std::size_t i = 1; i < len; ++i) B = B * c[i]->eval(theta, lambda);
  return B;
}

json to_json(const StepRecord& r) {
  return {{"n", r.n},
          {"case", std::string(1, r.kase)},
          {"a", r.a},
          {"b", r.b},
          {"eps_in", r.eps_in},
          {"eps_out", r.eps_out},
          {"K_inv", r.K_inv},
          {"N", r.N},
          {"N_retained", r.N_retained},
          {"p", r.p},
          {"clusters_before", r.clusters_before},
          {"clusters_after", r.clusters_after},
          {"inner_iters", r.inner_iters},
          {"min_divisor", r.min_divisor},
          {"structure_verified", r.structure_verified},
          {"preconditions_ok", r.preconditions_ok},
          {"y_norm", r.y_norm},
          {"dA", r.dA},
          {"fre_norm", r.fre_norm},
          {"tail_norm", r.tail_norm},
          {"s_minus_id", r.s_minus_id},
          {"contracts_ok", r.contracts_ok},
          {"residual", r.residual},
          {"notes", r.notes}};
}

KamCell KamCell::restricted(double a2, double b2) const {
  KamCell c = *this;
  c.a = a2;
  c.b = b2;
  c.depth = depth + 1;
  c.nodes = MatFamily::nodes(a2, b2, degree());
  const auto Af = A_family();
  const auto Ff = F_family();
  c.A.clear();
  c.F.clear();
  for (double x : c.nodes) {
    c.A.push_back(Af(x));
    c.F.push_back(Ff(x));
  }
  return c;
}

std::vector<KamCell> initial_cells(const CocycleFamily& fam, double a, double b, const TransverseCert& cert,
                                   const KamOptions& opt) {
  auto Afn = [&](double x) { return fam.A(cplx(x, 0.0)); };
  double R = 1.0;
  for (int i = 0; i <= 64; ++i)
    for (cplx z : eigenvalues(Afn(a + (b - a) * i / 64.0))) R = std::max({R, std::abs(z), 1.0 / std::abs(z)});
  PartitionOptions popt = opt.partition;
  popt.degree = opt.degree;
  const auto dcs = partition_and_decompose(Afn, a, b, cert, opt.nu_prime, 1.25 * R, popt);

  std::vector<KamCell> out;
  for (const auto& dc : dcs) {
    KamCell c;
    c.a = dc.a;
    c.b = dc.b;
    c.nodes = dc.conj.nodes;
    c.sizes = dc.conj.sizes;
    c.cert = dc.cert;
    c.min_cross = dc.min_cross;
    for (size_t t = 0; t < c.nodes.size(); ++t) {
      const Mat& S = dc.conj.S[t];
      const Mat Sinv = S.inverse();
      c.A.push_back(block_diag(dc.conj.blocks[t]));
      TorusMatrix f = fam.F(cplx(c.nodes[t], 0.0)).conj_by(S, Sinv);
      f.set_h_nominal(kInf);
      drop_zeros(f);
      c.F.push_back(std::move(f));
    }
    auto f0 = std::make_shared<ChainFactor>();
    f0->kind = ChainFactor::Kind::constant;
    f0->a = c.a;
    f0->b = c.b;
    f0->S = dc.conj.S;
    c.chain.push_back(f0);
    push_snapshot(c, opt.schedule);
    out.push_back(std::move(c));
  }
  return out;
}

Elimination eliminate_nonresonant(const Mat& A, const TorusMatrix& F, const Sector& s, const Frequency& freq,
                                  double h, double tol, int max_inner, double noise_rel, bool parallel) {
  HomologicalSolver solver(A, s, freq, parallel);
  return eliminate_with(solver, A, F, s, freq, h, tol, max_inner, noise_rel);
}

Mat phase_matrix(const std::vector<int>& sizes, const std::vector<MultiIndex>& kappa,
                 const std::vector<double>& theta) {
  const auto off = block_offsets(sizes);
  Mat H = Mat::Identity(off.back(), off.back());
  for (size_t i = 0; i < sizes.size(); ++i) {
    double u = 0.0;
    for (size_t t = 0; t < theta.size(); ++t) u += kappa[i][t] * theta[t];
    H.block(off[i], off[i], sizes[i], sizes[i]) *= expi2pi(u);
  }
  return H;
}

TorusMatrix phase_conjugate(const TorusMatrix& F, const std::vector<int>& sizes, const std::vector<MultiIndex>& kappa,
                            const Frequency& freq) {
  const auto off = block_offsets(sizes);
  const int l = static_cast<int>(sizes.size());
  TorusMatrix out(F.m(), F.d(), F.h_nominal());
  for (const auto& [k, C] : F.coeffs())
    for (int i = 0; i < l; ++i) {
      const cplx f = std::conj(freq.phase(kappa[i]));
      for (int j = 0; j < l; ++j) {
        const auto src = C.block(off[i], off[j], sizes[i], sizes[j]);
        if (src.cwiseAbs().maxCoeff() == 0.0) continue;
        slot(out, add(sub(k, kappa[i]), kappa[j])).block(off[i], off[j], sizes[i], sizes[j]) += f * src;
      }
    }
  return out;
}

PhaseRemoval remove_resonances(const Mat& A_new, const TorusMatrix& f_re, const TorusMatrix& F,
                               const std::vector<int>& sizes, const std::vector<MultiIndex>& kappa,
                               const Frequency& freq) {
  PhaseRemoval out;
  out.A_pp = phase_conjugate(TorusMatrix::constant(A_new, freq.d()), sizes, kappa, freq).mean();
  const TorusMatrix moved = phase_conjugate(f_re, sizes, kappa, freq);
  for (const auto& [k, C] : moved.coeffs()) {
    if (!is_zero(k)) {
      json w = {{"k", k}, {"kappa", kappa}, {"sizes", sizes}};
      for (const auto& [k0, C0] : f_re.coeffs()) w["f_re_modes"].push_back(k0);
      throw Error(ErrorKind::ResonanceStructure, "resonant term not moved to the mean", w);
    }
    out.A_pp += C;
  }
  out.F = phase_conjugate(F, sizes, kappa, freq);
  return out;
}

ConstantDiagonalization diagonalize_constant(const Mat& A, const std::vector<int>& sizes, int max_iter) {
  const auto off = block_offsets(sizes);
  const int l = static_cast<int>(sizes.size()), m = static_cast<int>(A.rows());
  ConstantDiagonalization out;
  Mat M = A;
  out.S = Mat::Identity(m, m);
  while (true) {
    out.off_norm = off_block_norm(M, sizes);
    if (out.off_norm <= 1e-13 * std::max(1.0, opnorm(M))) break;
    if (out.iterations >= max_iter)
      throw Error(ErrorKind::Divergence, "constant block diagonalisation did not converge",
                  {{"off_norm", out.off_norm}, {"iterations", out.iterations}});
    Mat X = Mat::Zero(m, m);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j)
        if (i != j)
          X.block(off[i], off[j], sizes[i], sizes[j]) =
              sylvester(M.block(off[i], off[i], sizes[i], sizes[i]), M.block(off[j], off[j], sizes[j], sizes[j]),
                        -M.block(off[i], off[j], sizes[i], sizes[j]));
    const Mat E = X.exp();
    const Mat Einv = (-X).exp();
    M = Einv * M * E;
    out.S = out.S * E;
    ++out.iterations;
  }
  out.A_tilde = block_diag(diag_blocks(M, sizes));
  out.S_inv = out.S.inverse();
  return out;
}

StepOutcome kam_step(KamCell& c, const CocycleFamily& fam, const KamOptions& opt, std::vector<KamCell>* children) {
  const KamSchedule& sch = opt.schedule;
  const Frequency& freq = fam.freq;
  const int n = c.stage, m = fam.m, D = static_cast<int>(c.nodes.size()), mid = c.mid();
  const double h = sch.h(n), h1 = sch.h(n + 1);
  const bool paper = sch.mode == ScheduleMode::paper;

  StepRecord rec;
  rec.n = n;
  rec.a = c.a;
  rec.b = c.b;
  rec.clusters_before = static_cast<int>(c.sizes.size());
  double eps = 0.0;
  for (const auto& f : c.F) eps = std::max(eps, norm_h(f, h));
  rec.eps_in = eps;
  auto finish = [&] {
    ++c.stage;
    push_snapshot(c, sch);
    rec.eps_out = c.snapshots.back().eps;
    rec.clusters_after = static_cast<int>(c.sizes.size());
    std::mt19937_64 rng(opt.seed + 7919u * static_cast<unsigned>(n) + static_cast<unsigned>(1e6 * c.a));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < opt.residual_samples; ++i) {
      std::vector<double> th(freq.d());
      for (double& x : th) x = U(rng);
      const double lam = c.a + (c.b - c.a) * U(rng);
      rec.residual = std::max(rec.residual, conjugacy_residual(c, fam, c.stage - 1, th, lam));
    }
    c.records.push_back(rec);
    return StepOutcome::advanced;
  };
  if (eps == 0.0) {
    rec.kase = '0';
    return finish();
  }

  double normA = 0.0;
  for (const auto& A : c.A) normA = std::max(normA, opnorm(A));
  const double Mt = std::max(1.0, normA);

  double K_inv;
  std::vector<int> N_seq;
  if (paper) {
    double Rn = 1.0, nu = kInf;
    for (int t = 0; t < D; ++t) {
      const auto dec = block_decomposition(c.A[t], c.sizes);
      nu = std::min(nu, dec.nu);
      for (cplx z : dec.values) Rn = std::max({Rn, std::abs(z), 1.0 / std::abs(z)});
    }
    const StageConstants sc{std::log(Rn), std::log(Mt), std::log(c.cert.delta), c.cert.c.ln,
                            std::log(std::min(nu, Mt)), c.cert.r};
    const auto fails = paper_stage_conditions(sch, n, std::log(eps), sc, ConstantSeeds::paper(m).ln_b);
    if (!fails.empty())
      throw Error(ErrorKind::Precondition, "smallness conditions fail at stage " + std::to_string(n),
                  {{"stage", n}, {"eps", eps}, {"failed", fails}, {"cell", {c.a, c.b}}});
    K_inv = std::exp(-sch.ln_K(n, Rn));
    for (int p = 0; p <= m + 1; ++p) {
      const double lnNp = sch.ln_Np(n, p);
      if (lnNp > std::log(1e6))
        throw Error(ErrorKind::ResonanceBudget, "retained radius beyond budget", {{"stage", n}, {"ln_N", lnNp}});
      N_seq.push_back(static_cast<int>(std::exp(lnNp)));
    }
  } else {
    K_inv = std::cbrt(eps);
    const double target = 0.01 * std::pow(eps, sch.kappa_prac);
    int N0 = sch.N_cap;
    for (int N = 1; N <= sch.N_cap; ++N) {
      double worst = 0.0;
      for (const auto& f : c.F) worst = std::max(worst, tail_norm_h(f, h1, N));
      if (worst <= target) {
        N0 = N;
        break;
      }
    }
    for (int p = 0; p <= m + 1; ++p) N_seq.push_back(std::min(N0 << p, 4 * sch.N_cap));
  }
  rec.K_inv = K_inv;

  std::string kase;
  {
    std::vector<Mat> S;
    std::vector<int> sizes;
    if (refine_blocks(c, K_inv, S, sizes)) {
      apply_constant(c, S, sizes);
      kase += 'c';
      rec.notes.push_back("blocks split before elimination");
    }
  }

  std::vector<Decomposition> decs(D);
  double Rn = 1.0;
  for (int t = 0; t < D; ++t) {
    decs[t] = block_decomposition(c.A[t], c.sizes);
    for (cplx z : decs[t].values) Rn = std::max({Rn, std::abs(z), 1.0 / std::abs(z)});
  }
  Decomposition d0 = decs[mid];
  d0.zeta = std::max(d0.zeta, K_inv / 10.0);
  const StructureOptions so{m, 1.05 * Rn, K_inv / 20.0, paper};
  const ResonanceStructure rs = resonance_structure(d0, decs, freq, N_seq, K_inv, so);
  rec.N = rs.N;
  rec.N_retained = rs.N_prime;
  rec.p = rs.p;
  rec.structure_verified = rs.verified;
  rec.preconditions_ok = rs.preconditions_ok;
  for (const auto& f : rs.failures) rec.notes.push_back(f);
  const Sector sec{c.sizes, rs.group_of, rs.kappa, rs.N_prime};

  std::vector<std::unique_ptr<HomologicalSolver>> solvers(D);
  for_nodes(D, opt.parallel, [&](int t) { solvers[t] = std::make_unique<HomologicalSolver>(c.A[t], sec, freq, false); });
  rec.min_divisor = kInf;
  for (const auto& s : solvers) rec.min_divisor = std::min(rec.min_divisor, s->min_divisor().value);
  if (rec.min_divisor < 0.5 * K_inv) {
    if (children && c.depth < opt.max_depth) {
      const double x = 0.5 * (c.a + c.b);
      children->push_back(c.restricted(c.a, x));
      children->push_back(c.restricted(x, c.b));
      return StepOutcome::split;
    }
    c.excluded = true;
    c.exclusion_reason = "divisor " + std::to_string(rec.min_divisor) + " below K^{-1}/2 at depth " +
                         std::to_string(c.depth) + ", stage " + std::to_string(n);
    rec.notes.push_back(c.exclusion_reason);
    c.records.push_back(rec);
    return StepOutcome::excluded;
  }

  const double tol = 1e-3 * eps * std::min(1.0, eps);
  std::vector<Elimination> el(D);
  for_nodes(D, opt.parallel, [&](int t) {
    el[t] = eliminate_with(*solvers[t], c.A[t], c.F[t], sec, freq, h, tol, opt.max_inner, opt.noise_rel);
  });
  solvers.clear();

  auto fy = std::make_shared<ChainFactor>();
  fy->kind = ChainFactor::Kind::exp;
  fy->a = c.a;
  fy->b = c.b;
  for (int t = 0; t < D; ++t) {
    const auto& e = el[t];
    TorusMatrix Y = e.Y + e.Y_lo;
    rec.y_norm = std::max(rec.y_norm, norm_h(Y, h));
    rec.dA = std::max(rec.dA, opnorm(e.A_new - c.A[t]));
    rec.fre_norm = std::max(rec.fre_norm, norm_h(e.f_re, h));
    rec.tail_norm = std::max(rec.tail_norm, norm_h(e.residual, h1));
    rec.inner_iters = std::max(rec.inner_iters, e.iterations);
    fy->Y.push_back(std::move(Y));
  }
  c.chain.push_back(fy);
  if (rec.y_norm > std::sqrt(eps)) rec.contracts_ok = false, rec.notes.push_back("|Y| above eps^{1/2}");
  if (rec.dA > 3 * Mt * eps) rec.contracts_ok = false, rec.notes.push_back("|A' - A| above 3 M eps");
  if (rec.fre_norm > 3 * Mt * eps) rec.contracts_ok = false, rec.notes.push_back("|f_re| above 3 M eps");

  if (!rs.trivial()) {
    auto fp = std::make_shared<ChainFactor>();
    fp->kind = ChainFactor::Kind::phase;
    fp->a = c.a;
    fp->b = c.b;
    fp->kappa = rs.kappa;
    fp->sizes = c.sizes;
    c.chain.push_back(fp);
    for (int t = 0; t < D; ++t) {
      auto pr = remove_resonances(el[t].A_new, el[t].f_re, el[t].residual, c.sizes, rs.kappa, freq);
      c.A[t] = std::move(pr.A_pp);
      c.F[t] = std::move(pr.F);
    }
  } else {
    for (int t = 0; t < D; ++t) {
      c.A[t] = std::move(el[t].A_new);
      c.F[t] = std::move(el[t].residual);
    }
  }
  for (auto& f : c.F) drop_zeros(f);

  // merge blocks whose spectra came within 2 K^{-1}
  const int l = static_cast<int>(c.sizes.size());
  const auto off = block_offsets(c.sizes);
  std::vector<std::vector<cplx>> spec(l);
  for (int i = 0; i < l; ++i) spec[i] = eigenvalues(c.A[mid].block(off[i], off[i], c.sizes[i], c.sizes[i]));
  std::vector<int> parent(l);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j)
      if (set_distance(spec[i], spec[j]) < 2.0 * K_inv) parent[find(j)] = find(i);
  std::vector<std::vector<int>> comps;
  std::vector<int> comp_of(l, -1);
  for (int i = 0; i < l; ++i) {
    const int r = find(i);
    if (comp_of[r] < 0) {
      comp_of[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[comp_of[r]].push_back(i);
  }
  if (static_cast<int>(comps.size()) < l) {
    Mat L = Mat::Zero(m, m);
    std::vector<int> sizes;
    int col = 0;
    for (const auto& g : comps) {
      int s = 0;
      for (int i : g)
        for (int r = 0; r < c.sizes[i]; ++r, ++s) L(off[i] + r, col++) = 1.0;
      sizes.push_back(s);
    }
    auto fl = std::make_shared<ChainFactor>();
    fl->kind = ChainFactor::Kind::constant;
    fl->a = c.a;
    fl->b = c.b;
    fl->S = {L};
    c.chain.push_back(fl);
    const Mat Lt = L.transpose();
    for (int t = 0; t < D; ++t) {
      c.A[t] = Lt * c.A[t] * L;
      c.F[t] = c.F[t].conj_by(L, Lt);
    }
    c.sizes = sizes;
    kase += 'b';
  }

  double off_max = 0.0;
  for (const auto& A : c.A) off_max = std::max(off_max, off_block_norm(A, c.sizes));
  if (off_max > 0.0) {
    std::vector<Mat> S(D);
    for (int t = 0; t < D; ++t) {
      const auto cd = diagonalize_constant(c.A[t], c.sizes);
      S[t] = cd.S;
      rec.s_minus_id = std::max(rec.s_minus_id, opnorm(cd.S - Mat::Identity(m, m)));
    }
    apply_constant(c, S, c.sizes);
  }
  rec.kase = kase.empty() ? 'a' : kase.back();
  if (kase.size() > 1) rec.notes.push_back("split and merge in one step");

  const StepOutcome o = finish();
  auto& r = c.records.back();
  if (!(r.eps_out <= std::pow(eps, 1.35))) {
    r.contracts_ok = false;
    r.notes.push_back("|F_{n+1}| above |F_n|^{1.35}");
  }
  return o;
}

double conjugacy_residual(const KamCell& c, const CocycleFamily& fam, int s, const std::vector<double>& theta,
                          double lambda) {
  const auto& snap = c.snapshots.at(s);
  const Mat B = chain_eval(c.chain, snap.chain_len, theta, lambda);
  std::vector<double> th1 = theta;
  for (size_t t = 0; t < th1.size(); ++t) th1[t] += fam.freq.alpha[t];
  const Mat Bp = chain_eval(c.chain, snap.chain_len, th1, lambda);
  const Mat M = fam.at(lambda).eval(theta);
  const Mat lhs = Bp.partialPivLu().solve(M * B);
  const Mat target = (*snap.A)(lambda) + (*snap.F)(lambda).eval(theta);
  const double nb = opnorm(B);
  return opnorm(lhs - target) / ((1.0 + nb * nb) * opnorm(M));
}

double stage_norm(const KamCell& c, int s, double lambda) {
  const auto& snap = c.snapshots.at(s);
  return norm_h((*snap.F)(lambda), snap.h);
}

KamRun run_kam(const CocycleFamily& fam, double a, double b, const TransverseCert& cert, int steps,
               const KamOptions& opt) {
  KamRun run;
  run.cert = cert;
  run.cells = initial_cells(fam, a, b, cert, opt);
  for (int st = 0; st < steps; ++st) {
    std::deque<KamCell> todo(std::make_move_iterator(run.cells.begin()), std::make_move_iterator(run.cells.end()));
    std::vector<KamCell> done;
    while (!todo.empty()) {
      KamCell c = std::move(todo.front());
      todo.pop_front();
      if (c.excluded || c.stage > st + 1) {
        done.push_back(std::move(c));
        continue;
      }
      std::vector<KamCell> kids;
      if (kam_step(c, fam, opt, &kids) == StepOutcome::split)
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) todo.push_front(std::move(*it));
      else
        done.push_back(std::move(c));
    }
    std::sort(done.begin(), done.end(), [](const KamCell& x, const KamCell& y) { return x.a < y.a; });
    run.cells = std::move(done);
  }
  run.steps = steps;
  json cells = json::array();
  for (const auto& c : run.cells) {
    json recs = json::array();
    for (const auto& r : c.records) recs.push_back(to_json(r));
    cells.push_back({{"a", c.a},
                     {"b", c.b},
                     {"depth", c.depth},
                     {"stage", c.stage},
                     {"sizes", c.sizes},
                     {"excluded", c.excluded},
                     {"exclusion_reason", c.exclusion_reason},
                     {"records", recs}});
  }
  run.manifest = {{"schedule", to_json(opt.schedule)}, {"steps", steps}, {"cells", cells}};
  return run;
}

const KamCell* find_cell(const std::vector<KamCell>& cells, double lambda) {
  for (const auto& c : cells)
    if (c.contains(lambda)) return &c;
  return nullptr;
}

}  // namespace qpkam
