#include "qpkam/homological.hpp"

#include <algorithm>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qpkam/fourier_grid.hpp"
#include "qpkam/poly.hpp"

namespace qpkam {

namespace {

using quad = __float128;

struct qc {
  quad re = 0, im = 0;
};
inline qc q_of(cplx z) { return {static_cast<quad>(z.real()), static_cast<quad>(z.imag())}; }
inline qc operator+(qc a, qc b) { return {a.re + b.re, a.im + b.im}; }
inline qc operator-(qc a, qc b) { return {a.re - b.re, a.im - b.im}; }
inline qc operator*(qc a, qc b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline cplx to_cplx(qc a) { return {static_cast<double>(a.re), static_cast<double>(a.im)}; }

// A_ii X - e X A_jj - H with X = Xh + Xl, formed in quad precision.
Mat quad_residual(const Mat& Ai, const Mat& Aj, cplx e, const Mat& Xh, const Mat& Xl, const Mat& H) {
  const int p = static_cast<int>(Xh.rows()), q = static_cast<int>(Xh.cols());
  std::vector<qc> X(p * q);
  for (int c = 0; c < q; ++c)
    for (int r = 0; r < p; ++r) X[r + p * c] = q_of(Xh(r, c)) + q_of(Xl(r, c));
  const qc eq = q_of(e);
  Mat R(p, q);
  for (int c = 0; c < q; ++c)
    for (int r = 0; r < p; ++r) {
      qc acc = qc{} - q_of(H(r, c));
      for (int t = 0; t < p; ++t) acc = acc + q_of(Ai(r, t)) * X[t + p * c];
      qc xa{};
      for (int t = 0; t < q; ++t) xa = xa + X[r + p * t] * q_of(Aj(t, c));
      acc = acc - eq * xa;
      R(r, c) = to_cplx(acc);
    }
  return R;
}

Vec vec_of(const Mat& X) { return Eigen::Map<const Vec>(X.data(), X.size()); }
Mat mat_of(const Vec& v, int p, int q) { return Eigen::Map<const Mat>(v.data(), p, q); }

}  // namespace

Truncation truncate(const TorusMatrix& f, int N) { return {f.truncated(N), f.tail(N)}; }

std::vector<int> block_offsets(const std::vector<int>& sizes) {
  std::vector<int> off(sizes.size() + 1, 0);
  for (size_t i = 0; i < sizes.size(); ++i) off[i + 1] = off[i] + sizes[i];
  return off;
}

bool Sector::resonant(int i, int j, const MultiIndex& k) const {
  if (i == j || group_of.empty() || group_of[i] != group_of[j]) return false;
  if (kappa.empty()) return is_zero(k);
  return k == sub(kappa[i], kappa[j]);
}

bool Sector::contains(int i, int j, const MultiIndex& k) const {
  if (l1(k) > N) return false;
  if (i == j && is_zero(k)) return false;
  return !resonant(i, j, k);
}

namespace {

TorusMatrix split(const TorusMatrix& f, const Sector& s, bool keep_retained) {
  const auto off = block_offsets(s.sizes);
  TorusMatrix out(f.m(), f.d(), f.h_nominal());
  for (const auto& [k, C] : f.coeffs()) {
    Mat D = Mat::Zero(C.rows(), C.cols());
    bool any = false;
    for (int i = 0; i < s.blocks(); ++i)
      for (int j = 0; j < s.blocks(); ++j)
        if (s.contains(i, j, k) == keep_retained) {
          D.block(off[i], off[j], s.sizes[i], s.sizes[j]) = C.block(off[i], off[j], s.sizes[i], s.sizes[j]);
          any = true;
        }
    if (any) out.coeffs().emplace(k, std::move(D));
  }
  return out;
}

}  // namespace

TorusMatrix project(const TorusMatrix& f, const Sector& s) { return split(f, s, true); }
TorusMatrix project_out(const TorusMatrix& f, const Sector& s) { return split(f, s, false); }

HomologicalSolver::HomologicalSolver(const Mat& A, const Sector& s, const Frequency& freq, bool parallel)
    : A_(A), s_(s), freq_(freq), parallel_(parallel), off_(block_offsets(s.sizes)) {
  if (off_.back() != A.rows()) throw Error(ErrorKind::Domain, "block sizes do not match the matrix");
  const int l = s.blocks();
  for (int i = 0; i < l; ++i) {
    blocks_.push_back(A.block(off_[i], off_[i], s.sizes[i], s.sizes[i]));
    eig_.push_back(eigenvalues(blocks_.back()));
  }
  for (const auto& k : l1_ball(freq.d(), s.N))
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j)
        if (s.contains(i, j, k)) tasks_.push_back(Task{i, j, k, freq.phase(k), {}});
  const int n = static_cast<int>(tasks_.size());
#pragma omp parallel for schedule(dynamic, 8) if (parallel_ && n > 64)
  for (int t = 0; t < n; ++t) {
    auto& T = tasks_[t];
    const Mat& Ai = blocks_[T.i];
    const Mat& Aj = blocks_[T.j];
    const int p = static_cast<int>(Ai.rows()), q = static_cast<int>(Aj.rows());
    Mat L = Eigen::kroneckerProduct(Mat::Identity(q, q), Ai).eval();
    Mat AjT = Aj.transpose();
    for (int c = 0; c < q; ++c)
      for (int r = 0; r < q; ++r)
        if (AjT(r, c) != cplx(0)) L.block(r * p, c * p, p, p) -= T.e * AjT(r, c) * Mat::Identity(p, p);
    T.lu.compute(L);
  }
}

Divisor HomologicalSolver::min_divisor() const {
  Divisor best;
  for (const auto& T : tasks_)
    for (cplx a : eig_[T.i])
      for (cplx b : eig_[T.j]) {
        double v = std::abs(a - T.e * b);
        if (v < best.value) best = Divisor{v, T.i, T.j, T.k};
      }
  return best;
}

HomologicalSolver::Result HomologicalSolver::solve(const TorusMatrix& H, int refine) const {
  const int m = static_cast<int>(A_.rows());
  const int n = static_cast<int>(tasks_.size());
  std::vector<Mat> Xh(n), Xl(n), R(n);
  auto body = [&](int t) {
    const auto& T = tasks_[t];
    const int p = s_.sizes[T.i], q = s_.sizes[T.j];
    const Mat& Ai = blocks_[T.i];
    const Mat& Aj = blocks_[T.j];
    auto it = H.coeffs().find(T.k);
    Mat Hb = it == H.coeffs().end() ? Mat::Zero(p, q) : Mat(it->second.block(off_[T.i], off_[T.j], p, q));
    if (Hb.isZero(0.0)) {
      Xh[t] = Mat::Zero(p, q);
      Xl[t] = Mat::Zero(p, q);
      R[t] = Mat::Zero(p, q);
      return;
    }
    Xh[t] = mat_of(T.lu.solve(vec_of(Hb)), p, q);
    Xl[t] = Mat::Zero(p, q);
    R[t] = quad_residual(Ai, Aj, T.e, Xh[t], Xl[t], Hb);
    for (int s = 0; s < refine; ++s) {
      Xl[t] -= mat_of(T.lu.solve(vec_of(R[t])), p, q);
      R[t] = quad_residual(Ai, Aj, T.e, Xh[t], Xl[t], Hb);
    }
  };
  if (parallel_) {
#pragma omp parallel for schedule(dynamic, 8) if (n > 64)
    for (int t = 0; t < n; ++t) body(t);
  } else {
    for (int t = 0; t < n; ++t) body(t);
  }
  Result out{TorusMatrix(m, freq_.d(), H.h_nominal()), TorusMatrix(m, freq_.d(), H.h_nominal()),
             TorusMatrix(m, freq_.d(), H.h_nominal())};
  for (int t = 0; t < n; ++t) {
    const auto& T = tasks_[t];
    if (Xh[t].isZero(0.0) && R[t].isZero(0.0)) continue;
    const int p = s_.sizes[T.i], q = s_.sizes[T.j];
    for (TorusMatrix* dst : {&out.Y, &out.Y_lo, &out.residual}) {
      Mat& C = dst->at(T.k);
      if (C.size() == 0) C = Mat::Zero(m, m);
    }
    out.Y.at(T.k).block(off_[T.i], off_[T.j], p, q) = Xh[t];
    out.Y_lo.at(T.k).block(off_[T.i], off_[T.j], p, q) = Xl[t];
    out.residual.at(T.k).block(off_[T.i], off_[T.j], p, q) = R[t];
  }
  return out;
}

TorusMatrix homological_solve(const Mat& A, const TorusMatrix& H, const Frequency& freq, const Sector& s) {
  HomologicalSolver solver(A, s, freq);
  auto d = solver.min_divisor();
  if (d.value < 1e-13 * std::max(1.0, opnorm(A)))
    throw Error(ErrorKind::NearSingular, "resonant mode leaked into the homological equation",
                {{"i", d.i}, {"j", d.j}, {"k", d.k}, {"divisor", d.value}});
  auto r = solver.solve(H);
  return r.Y + r.Y_lo;
}

Mat expm1_small(const Mat& X) {
  const int m = static_cast<int>(X.rows());
  const double nx = X.cwiseAbs().rowwise().sum().maxCoeff();
  if (nx > 0.5) return Mat(X.exp()) - Mat::Identity(m, m);
  Mat term = X, sum = X;
  for (int k = 2; k < 40; ++k) {
    term = term * X / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-40 * (1e-300 + sum.cwiseAbs().maxCoeff())) break;
  }
  return sum;
}

Mat expm2_small(const Mat& X) {
  const int m = static_cast<int>(X.rows());
  const double nx = X.cwiseAbs().rowwise().sum().maxCoeff();
  if (nx > 0.5) return Mat(X.exp()) - Mat::Identity(m, m) - X;
  Mat term = X * X / 2.0, sum = term;
  for (int k = 3; k < 40; ++k) {
    term = term * X / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-40 * (1e-300 + sum.cwiseAbs().maxCoeff())) break;
  }
  return sum;
}

namespace {

int grid_P(int d, int radius) {
  int P = FourierGrid::size_for(radius);
  (void)d;
  return P;
}

}  // namespace

TorusMatrix conjugation_remainder(const Mat& A, const TorusMatrix& F, const TorusMatrix& Y, const Frequency& freq,
                                  int radius) {
  const int m = static_cast<int>(A.rows()), d = freq.d();
  if (Y.empty()) return TorusMatrix(m, d, F.h_nominal());
  const int need = std::max({radius, F.max_mode(), Y.max_mode()});
  FourierGrid grid(d, grid_P(d, need));
  const TorusMatrix Fz = F.empty() ? TorusMatrix::constant(Mat::Zero(m, m), d) : F;
  const auto Yp = grid.sample(Y.shifted(freq));
  const auto Yv = grid.sample(Y);
  const auto Fv = grid.sample(Fz);
  std::vector<Mat> Qv(grid.size());
#pragma omp parallel for schedule(static)
  for (int t = 0; t < grid.size(); ++t) {
    const Mat X2 = expm2_small(-Yp[t]);
    const Mat Z2 = expm2_small(Yv[t]);
    const Mat X = X2 - Yp[t];
    const Mat Z = Z2 + Yv[t];
    const Mat AF = A + Fv[t];
    Qv[t] = -Yp[t] * Fv[t] + Fv[t] * Yv[t] + X2 * AF + AF * Z2 + X * AF * Z;
  }
  return grid.analyse(Qv, radius, F.h_nominal());
}

TorusMatrix conjugated_direct(const Mat& A, const TorusMatrix& F, const TorusMatrix& Y, const Frequency& freq,
                              int radius) {
  const int m = static_cast<int>(A.rows()), d = freq.d();
  const int need = std::max({radius, F.max_mode(), Y.max_mode()});
  FourierGrid grid(d, grid_P(d, need));
  const TorusMatrix Fz = F.empty() ? TorusMatrix::constant(Mat::Zero(m, m), d) : F;
  const TorusMatrix Yz = Y.empty() ? TorusMatrix::constant(Mat::Zero(m, m), d) : Y;
  const auto Yp = grid.sample(Yz.shifted(freq));
  const auto Yv = grid.sample(Yz);
  const auto Fv = grid.sample(Fz);
  std::vector<Mat> G(grid.size());
  for (int t = 0; t < grid.size(); ++t) G[t] = Mat((-Yp[t]).exp()) * (A + Fv[t]) * Mat(Yv[t].exp()) - A;
  return grid.analyse(G, radius, F.h_nominal());
}

}  // namespace qpkam
