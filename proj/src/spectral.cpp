#include "qpkam/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <deque>
#include <numeric>

#include "qpkam/poly.hpp"

namespace qpkam {

std::vector<cplx> Decomposition::cluster_values(int i) const {
  std::vector<cplx> v;
  for (int idx : clusters[i]) v.push_back(values[idx]);
  return v;
}

std::vector<int> Decomposition::sizes() const {
  std::vector<int> s;
  for (const auto& c : clusters) s.push_back(static_cast<int>(c.size()));
  return s;
}

json to_json(const Decomposition& d) {
  json cl = json::array();
  for (int i = 0; i < d.size(); ++i) {
    json c = json::array();
    for (cplx z : d.cluster_values(i)) c.push_back({z.real(), z.imag()});
    cl.push_back(c);
  }
  return json{{"clusters", cl}, {"nu", d.nu}, {"zeta", d.zeta}};
}

double set_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = HUGE_VAL;
  for (cplx x : a)
    for (cplx y : b) d = std::min(d, std::abs(x - y));
  return d;
}

double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  auto one = [](const std::vector<cplx>& p, const std::vector<cplx>& q) {
    double h = 0.0;
    for (cplx x : p) {
      double best = HUGE_VAL;
      for (cplx y : q) best = std::min(best, std::abs(x - y));
      h = std::max(h, best);
    }
    return h;
  };
  return std::max(one(a, b), one(b, a));
}

double diameter(const std::vector<cplx>& a) {
  double d = 0.0;
  for (cplx x : a)
    for (cplx y : a) d = std::max(d, std::abs(x - y));
  return d;
}

Decomposition maximal_separated_decomposition(const std::vector<cplx>& values, double mu) {
  const int n = static_cast<int>(values.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(values[i] - values[j]) <= mu) parent[find(i)] = find(j);
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  auto key = [&](const std::vector<int>& g) {
    cplx best = values[g[0]];
    for (int i : g)
      if (values[i].real() < best.real() || (values[i].real() == best.real() && values[i].imag() < best.imag()))
        best = values[i];
    return best;
  };
  std::sort(groups.begin(), groups.end(), [&](const auto& x, const auto& y) {
    cplx a = key(x), b = key(y);
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  Decomposition d;
  d.values = values;
  d.clusters = std::move(groups);
  d.nu = mu;
  for (int i = 0; i < d.size(); ++i) d.zeta = std::max(d.zeta, diameter(d.cluster_values(i)));
  if (d.zeta > n * mu * (1 + 1e-12)) throw Error(ErrorKind::Contract, "cluster diameter above m*mu");
  return d;
}

std::vector<int> assign_to_clusters(const std::vector<cplx>& values, const std::vector<std::vector<cplx>>& ref,
                                    double nu) {
  std::vector<int> out(values.size(), -1);
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t c = 0; c < ref.size(); ++c) {
      bool near = false;
      for (cplx z : ref[c])
        if (std::abs(values[i] - z) < nu) near = true;
      if (near) {
        if (out[i] >= 0) {
          out[i] = -1;
          break;
        }
        out[i] = static_cast<int>(c);
      }
    }
  }
  return out;
}

Mat block_diag(const std::vector<Mat>& blocks) {
  int m = 0;
  for (const auto& b : blocks) m += static_cast<int>(b.rows());
  Mat out = Mat::Zero(m, m);
  int off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += static_cast<int>(b.rows());
  }
  return out;
}

std::vector<Mat> diag_blocks(const Mat& A, const std::vector<int>& sizes) {
  std::vector<Mat> out;
  int off = 0;
  for (int s : sizes) {
    out.push_back(A.block(off, off, s, s));
    off += s;
  }
  return out;
}

double off_block_norm(const Mat& A, const std::vector<int>& sizes) {
  Mat B = A;
  int off = 0;
  for (int s : sizes) {
    B.block(off, off, s, s).setZero();
    off += s;
  }
  return opnorm(B);
}

namespace {

// Solves P X - X Q = C.
Mat sylvester(const Mat& P, const Mat& Q, const Mat& C) {
  const int p = static_cast<int>(P.rows()), q = static_cast<int>(Q.rows());
  Mat L = Mat::Zero(p * q, p * q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < q; ++i) {
      if (i == j) L.block(j * p, j * p, p, p) += P;
      L.block(j * p, i * p, p, p) -= Q(i, j) * Mat::Identity(p, p);
    }
  Eigen::Map<const Vec> c(C.data(), p * q);
  Eigen::PartialPivLU<Mat> lu(L);
  Vec x = lu.solve(c);
  if (!x.allFinite()) throw Error(ErrorKind::NearSingular, "Sylvester operator singular");
  return Eigen::Map<Mat>(x.data(), p, q);
}

}  // namespace

BlockSplit block_split(const Mat& A, const std::function<int(cplx)>& label, int l) {
  const int m = static_cast<int>(A.rows());
  Eigen::ComplexSchur<Mat> schur(A);
  if (schur.info() != Eigen::Success) throw Error(ErrorKind::NearSingular, "Schur decomposition failed");
  Mat T = schur.matrixT();
  Mat Q = schur.matrixU();
  std::vector<int> lab(m);
  for (int i = 0; i < m; ++i) {
    lab[i] = label(T(i, i));
    if (lab[i] < 0 || lab[i] >= l) {
      json w;
      w["eigenvalue"] = {T(i, i).real(), T(i, i).imag()};
      throw Error(ErrorKind::DecompositionInstability, "eigenvalue not attached to a unique cluster", w);
    }
  }
  // bubble sort by label with adjacent Givens swaps
  for (int pass = 0; pass < m; ++pass)
    for (int k = 0; k + 1 < m; ++k) {
      if (lab[k] <= lab[k + 1]) continue;
      Eigen::JacobiRotation<cplx> G;
      G.makeGivens(T(k, k + 1), T(k + 1, k + 1) - T(k, k));
      T.applyOnTheLeft(k, k + 1, G.adjoint());
      T.applyOnTheRight(k, k + 1, G);
      Q.applyOnTheRight(k, k + 1, G);
      T(k + 1, k) = 0.0;
      std::swap(lab[k], lab[k + 1]);
    }
  std::vector<int> sizes(l, 0);
  for (int v : lab) ++sizes[v];
  for (int s : sizes)
    if (s == 0) throw Error(ErrorKind::DecompositionInstability, "empty cluster in block split");
  std::vector<int> off(l + 1, 0);
  for (int i = 0; i < l; ++i) off[i + 1] = off[i] + sizes[i];
  auto blk = [&](const Mat& M, int i, int j) { return M.block(off[i], off[j], sizes[i], sizes[j]); };
  Mat X = Mat::Identity(m, m);
  for (int j = 1; j < l; ++j)
    for (int i = j - 1; i >= 0; --i) {
      Mat C = Mat::Zero(sizes[i], sizes[j]);
      for (int k = i + 1; k <= j; ++k) C -= blk(T, i, k) * blk(X, k, j);
      X.block(off[i], off[j], sizes[i], sizes[j]) = sylvester(blk(T, i, i), blk(T, j, j), C);
    }
  BlockSplit out;
  out.S = Q * X;
  out.sizes = sizes;
  for (int i = 0; i < l; ++i) out.blocks.push_back(blk(T, i, i));
  return out;
}

double similarity_log_ceiling(int m, double normA, double nu) {
  const double lnb = (m * m + 4.0 * m) * std::log(120.0 * m);
  return lnb + m * m * (m + 2.0) * std::log(std::max(normA, 1e-300) / nu);
}

BlockConjugation block_diagonalize(const std::function<Mat(double)>& A, double a, double b, int degree,
                                   const std::vector<std::vector<cplx>>& ref, double nu_prime, double nu) {
  BlockConjugation out;
  out.a = a;
  out.b = b;
  out.nodes = MatFamily::nodes(a, b, degree);
  const int l = static_cast<int>(ref.size());
  auto label = [&](cplx z) {
    std::vector<int> lab = assign_to_clusters({z}, ref, nu_prime);
    return lab[0];
  };
  const double lambda0 = 0.5 * (a + b);
  const Mat A0 = A(lambda0);
  const int m = static_cast<int>(A0.rows());
  BlockSplit s0 = l > 1 ? block_split(A0, label, l) : BlockSplit{Mat::Identity(m, m), {A0}, {m}};
  out.sizes = s0.sizes;
  std::vector<int> off(l + 1, 0);
  for (int i = 0; i < l; ++i) off[i + 1] = off[i] + out.sizes[i];
  double normA = 0.0;
  for (double x : out.nodes) {
    Mat Ax = A(x);
    normA = std::max(normA, opnorm(Ax));
    Mat S = Mat::Identity(m, m);
    if (l > 1) {
      BlockSplit sx = block_split(Ax, label, l);
      if (sx.sizes != out.sizes) throw Error(ErrorKind::DecompositionInstability, "cluster sizes changed in cell");
      Mat Sinv = sx.S.inverse();
      for (int i = 0; i < l; ++i) {
        // projector onto cluster i applied to the reference basis
        Mat P = sx.S.middleCols(off[i], out.sizes[i]) * Sinv.middleRows(off[i], out.sizes[i]);
        S.middleCols(off[i], out.sizes[i]) = P * s0.S.middleCols(off[i], out.sizes[i]);
      }
    }
    Eigen::PartialPivLU<Mat> lu(S);
    Mat Sinv = lu.inverse();
    Mat C = Sinv * Ax * S;
    out.residual = std::max(out.residual, off_block_norm(C, out.sizes) / std::max(1e-300, opnorm(Ax)));
    out.S.push_back(S);
    out.blocks.push_back(diag_blocks(C, out.sizes));
    out.norm_S = std::max(out.norm_S, opnorm(S));
    out.norm_Sinv = std::max(out.norm_Sinv, opnorm(Sinv));
    for (const auto& B : out.blocks.back()) out.norm_blocks = std::max(out.norm_blocks, opnorm(B));
  }
  out.log_ceiling = similarity_log_ceiling(m, normA, nu);
  const double worst = std::log(std::max({out.norm_S, out.norm_Sinv, out.norm_blocks}));
  out.ceiling_exceeded = worst > out.log_ceiling;
  return out;
}

double partition_log_width(int m, double R, double Mtilde, double nu_prime, double delta) {
  const double lnb = (m * m + 4.0 * m) * std::log(120.0 * m);
  return -lnb + 3.0 * m * (std::log(nu_prime) - 2 * std::log(R) - std::log(Mtilde)) + std::log(delta);
}

namespace {

struct CellCheck {
  bool ok = true;
  double min_cross = HUGE_VAL;
  double max_dh = 0.0;
  std::string why;
};

CellCheck check_cell(const std::function<Mat(double)>& A, const std::vector<double>& pts,
                     const std::vector<std::vector<cplx>>& ref, double nu_prime) {
  CellCheck out;
  const int l = static_cast<int>(ref.size());
  for (double x : pts) {
    auto ev = eigenvalues(A(x));
    auto lab = assign_to_clusters(ev, ref, nu_prime);
    std::vector<std::vector<cplx>> cl(l);
    for (size_t i = 0; i < ev.size(); ++i) {
      if (lab[i] < 0) {
        out.ok = false;
        out.why = "eigenvalue left the widened clusters";
        return out;
      }
      cl[lab[i]].push_back(ev[i]);
    }
    for (int i = 0; i < l; ++i) {
      if (cl[i].size() != ref[i].size()) {
        out.ok = false;
        out.why = "cluster cardinality changed";
        return out;
      }
      out.max_dh = std::max(out.max_dh, hausdorff(cl[i], ref[i]));
      for (int j = i + 1; j < l; ++j) out.min_cross = std::min(out.min_cross, set_distance(cl[i], cl[j]));
    }
    if (out.max_dh >= nu_prime) {
      out.ok = false;
      out.why = "Hausdorff drift above nu'";
      return out;
    }
    if (l > 1 && out.min_cross <= 6.0 * nu_prime) {
      out.ok = false;
      out.why = "cross-cluster distance below 6 nu'";
      return out;
    }
  }
  return out;
}

}  // namespace

std::vector<DecomposedCell> partition_and_decompose(const std::function<Mat(double)>& A, double a, double b,
                                                    const TransverseCert& cert, double nu_prime, double R,
                                                    const PartitionOptions& opt) {
  if (!(nu_prime > 0 && nu_prime <= 1)) throw Error(ErrorKind::Domain, "nu' must lie in (0,1]");
  const int ncell = std::max(1, static_cast<int>(std::ceil((b - a) / opt.base_width - 1e-12)));
  std::deque<std::tuple<double, double, int>> todo;
  for (int i = 0; i < ncell; ++i)
    todo.emplace_back(a + (b - a) * i / ncell, a + (b - a) * (i + 1) / ncell, 0);
  std::vector<DecomposedCell> out;
  while (!todo.empty()) {
    auto [lo, hi, depth] = todo.front();
    todo.pop_front();
    DecomposedCell c;
    c.a = lo;
    c.b = hi;
    c.depth = depth;
    c.lambda0 = 0.5 * (lo + hi);
    const Mat A0 = A(c.lambda0);
    const int m = static_cast<int>(A0.rows());
    for (cplx z : eigenvalues(A0))
      if (std::abs(z) > R || std::abs(z) < 1.0 / R) {
        json w;
        w["lambda"] = c.lambda0;
        w["R"] = R;
        throw Error(ErrorKind::Precondition, "spectrum outside the annulus D(R)", w);
      }
    c.at_lambda0 = maximal_separated_decomposition(eigenvalues(A0), 8.0 * nu_prime);
    for (int i = 0; i < c.at_lambda0.size(); ++i) c.ref.push_back(c.at_lambda0.cluster_values(i));
    auto pts = MatFamily::nodes(lo, hi, opt.degree);
    for (int s = 0; s < opt.check_samples; ++s) pts.push_back(lo + (hi - lo) * (s + 0.5) / opt.check_samples);
    CellCheck chk = check_cell(A, pts, c.ref, nu_prime);
    if (!chk.ok) {
      if (depth >= opt.max_bisections) {
        json w;
        w["a"] = lo;
        w["b"] = hi;
        w["reason"] = chk.why;
        throw Error(ErrorKind::DecompositionInstability, "cell still unstable after bisection", w);
      }
      const double mid = 0.5 * (lo + hi);
      todo.emplace_front(mid, hi, depth + 1);
      todo.emplace_front(lo, mid, depth + 1);
      continue;
    }
    c.min_cross = chk.min_cross;
    c.max_dh = chk.max_dh;
    c.conj = block_diagonalize(A, lo, hi, opt.degree, c.ref, nu_prime, nu_prime);
    const int l = c.at_lambda0.size();
    c.cert = multiset_to_decomposition(cert, l, m, R);
    c.cert.a = lo;
    c.cert.b = hi;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  return out;
}

json to_json(const DecomposedCell& c) {
  json j;
  j["a"] = c.a;
  j["b"] = c.b;
  j["lambda0"] = c.lambda0;
  j["pattern"] = c.conj.sizes;
  j["decomposition"] = to_json(c.at_lambda0);
  j["cert"] = to_json(c.cert);
  j["residual"] = c.conj.residual;
  j["norm_S"] = c.conj.norm_S;
  j["norm_S_inv"] = c.conj.norm_Sinv;
  j["log_ceiling"] = c.conj.log_ceiling;
  j["ceiling_exceeded"] = c.conj.ceiling_exceeded;
  j["min_cross"] = std::isfinite(c.min_cross) ? json(c.min_cross) : json(nullptr);
  j["max_dh"] = c.max_dh;
  j["depth"] = c.depth;
  return j;
}

StabilityReport decomposition_stability(const std::vector<std::vector<Mat>>& A,
                                        const std::vector<std::vector<Mat>>& Ap, double eps, double R, double Mtilde,
                                        double nu, double zeta, const TransverseCert& cert, int u_samples) {
  StabilityReport rep;
  if (A.empty() || A.size() != Ap.size()) throw Error(ErrorKind::Domain, "sample lists differ");
  int m = 0;
  for (const auto& B : A[0]) m += static_cast<int>(B.rows());
  const double root = std::pow(eps, 1.0 / m);
  if (!(eps < 1.0) || !(64.0 * m * m * Mtilde * Mtilde * R * root < 1.0)) {
    json w;
    w["eps"] = eps;
    w["lhs"] = 64.0 * m * m * Mtilde * Mtilde * R * root;
    throw Error(ErrorKind::Precondition, "perturbation too large for the stability lemma", w);
  }
  const int l = static_cast<int>(A[0].size());
  rep.dh.assign(l, 0.0);
  rep.dh_bound = 4.0 * m * m * Mtilde * Mtilde * root;
  rep.R_new = R + 8.0 * m * m * Mtilde * Mtilde * R * R * root;
  rep.nu_new = nu - 8.0 * m * m * Mtilde * Mtilde * root;
  rep.zeta_new = zeta + 8.0 * m * m * Mtilde * Mtilde * root;
  const double log_gbound =
      8 * m * std::log(2.0) + 10.0 * m * m * std::log(double(m)) + 3.0 * m * m * std::log(R) + m * std::log(Mtilde);
  rep.g_diff_bound = std::exp(log_gbound) * eps;
  const double dc = std::exp(log_gbound + cert.r * std::log(2.0 * cert.r / cert.delta)) * eps;
  const double cv = cert.c.value();
  rep.c_new_positive = cv > dc;
  rep.c_new_log = rep.c_new_positive ? std::log(cv - dc) : -HUGE_VAL;
  for (size_t s = 0; s < A.size(); ++s) {
    std::vector<std::vector<cplx>> sig(l), sigp(l);
    for (int i = 0; i < l; ++i) {
      if (opnorm(A[s][i] - Ap[s][i]) > eps * (1 + 1e-12)) rep.failures.push_back("block difference above eps");
      sig[i] = eigenvalues(A[s][i]);
      sigp[i] = eigenvalues(Ap[s][i]);
      rep.dh[i] = std::max(rep.dh[i], hausdorff(sig[i], sigp[i]));
      for (cplx z : sigp[i])
        if (std::abs(z) > rep.R_new || std::abs(z) < 1.0 / rep.R_new) rep.failures.push_back("annulus escape");
      if (diameter(sigp[i]) > rep.zeta_new + 1e-12) rep.failures.push_back("diameter above zeta'");
      for (int u = 0; u < u_samples; ++u) {
        double uu = static_cast<double>(u) / u_samples;
        double dg = std::abs(g_function(A[s][i], uu) - g_function(Ap[s][i], uu));
        rep.g_diff = std::max(rep.g_diff, dg);
      }
    }
    for (int i = 0; i < l; ++i)
      for (int j = i + 1; j < l; ++j)
        if (set_distance(sigp[i], sigp[j]) < rep.nu_new - 1e-12) rep.failures.push_back("separation below nu'");
  }
  for (int i = 0; i < l; ++i)
    if (rep.dh[i] > rep.dh_bound * (1 + 1e-9)) rep.failures.push_back("Hausdorff distance above bound");
  if (rep.g_diff > rep.g_diff_bound * (1 + 1e-9)) rep.failures.push_back("g difference above bound");
  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace qpkam
