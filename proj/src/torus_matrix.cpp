#include "qpkam/torus_matrix.hpp"

#include <algorithm>

namespace qpkam {

TorusMatrix TorusMatrix::constant(const Mat& A, int d, double h) {
  TorusMatrix f(static_cast<int>(A.rows()), d, h);
  f.c_[MultiIndex(d, 0)] = A;
  return f;
}

Mat& TorusMatrix::at(const MultiIndex& k) {
  auto it = c_.find(k);
  if (it == c_.end()) it = c_.emplace(k, Mat::Zero(m_, m_)).first;
  return it->second;
}

Mat TorusMatrix::coeff(const MultiIndex& k) const {
  auto it = c_.find(k);
  return it == c_.end() ? Mat::Zero(m_, m_) : it->second;
}

Mat TorusMatrix::eval(const std::vector<double>& theta) const {
  Mat out = Mat::Zero(m_, m_);
  for (const auto& [k, C] : c_) {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += k[i] * theta[i];
    out += C * expi2pi(s);
  }
  return out;
}

cplx TorusMatrix::eval_entry(int i, int j, const std::vector<double>& theta) const {
  cplx out = 0.0;
  for (const auto& [k, C] : c_) {
    double s = 0.0;
    for (int a = 0; a < d_; ++a) s += k[a] * theta[a];
    out += C(i, j) * expi2pi(s);
  }
  return out;
}

int TorusMatrix::max_mode() const {
  int n = 0;
  for (const auto& kv : c_) n = std::max(n, l1(kv.first));
  return n;
}

TorusMatrix TorusMatrix::shifted(const Frequency& w) const {
  TorusMatrix out(m_, d_, h_);
  for (const auto& [k, C] : c_) out.c_.emplace(k, C * w.phase(k));
  return out;
}

TorusMatrix TorusMatrix::mode_shifted(const MultiIndex& s) const {
  TorusMatrix out(m_, d_, h_);
  for (const auto& [k, C] : c_) out.c_.emplace(add(k, s), C);
  return out;
}

TorusMatrix TorusMatrix::truncated(int N) const {
  TorusMatrix out(m_, d_, h_);
  for (const auto& [k, C] : c_)
    if (l1(k) <= N) out.c_.emplace(k, C);
  return out;
}

TorusMatrix TorusMatrix::tail(int N) const {
  TorusMatrix out(m_, d_, h_);
  for (const auto& [k, C] : c_)
    if (l1(k) > N) out.c_.emplace(k, C);
  return out;
}

void TorusMatrix::drop_small(double rel) {
  double mx = 0.0;
  for (const auto& kv : c_) mx = std::max(mx, kv.second.cwiseAbs().maxCoeff());
  const double cut = rel * mx;
  for (auto it = c_.begin(); it != c_.end();) {
    if (mx == 0.0 || it->second.cwiseAbs().maxCoeff() <= cut)
      it = c_.erase(it);
    else
      ++it;
  }
}

TorusMatrix& TorusMatrix::operator+=(const TorusMatrix& o) {
  if (m_ == 0) {
    m_ = o.m_;
    d_ = o.d_;
    h_ = o.h_;
  }
  for (const auto& [k, C] : o.c_) {
    auto it = c_.find(k);
    if (it == c_.end())
      c_.emplace(k, C);
    else
      it->second += C;
  }
  h_ = std::min(h_, o.h_);
  return *this;
}

TorusMatrix TorusMatrix::operator+(const TorusMatrix& o) const {
  TorusMatrix out(*this);
  out += o;
  return out;
}

TorusMatrix TorusMatrix::operator-(const TorusMatrix& o) const {
  TorusMatrix out(*this);
  out += o * cplx(-1.0);
  return out;
}

TorusMatrix TorusMatrix::operator*(cplx s) const {
  TorusMatrix out(m_, d_, h_);
  for (const auto& [k, C] : c_) out.c_.emplace(k, C * s);
  return out;
}

TorusMatrix TorusMatrix::left(const Mat& P) const {
  TorusMatrix out(static_cast<int>(P.rows()), d_, h_);
  for (const auto& [k, C] : c_) out.c_.emplace(k, P * C);
  return out;
}

TorusMatrix TorusMatrix::right(const Mat& P) const {
  TorusMatrix out(static_cast<int>(P.cols()), d_, h_);
  for (const auto& [k, C] : c_) out.c_.emplace(k, C * P);
  return out;
}

TorusMatrix TorusMatrix::operator*(const TorusMatrix& o) const {
  TorusMatrix out(m_, d_, std::min(h_, o.h_));
  for (const auto& [k1, C1] : c_)
    for (const auto& [k2, C2] : o.c_) {
      auto k = add(k1, k2);
      auto it = out.c_.find(k);
      if (it == out.c_.end())
        out.c_.emplace(k, C1 * C2);
      else
        it->second += C1 * C2;
    }
  return out;
}

double norm_h(const TorusMatrix& f, double h) {
  if (h > f.h_nominal() * (1.0 + 1e-12)) {
    json w;
    w["h"] = h;
    w["h_nominal"] = f.h_nominal();
    throw Error(ErrorKind::StripOverreach, "norm requested beyond the nominal strip", w);
  }
  double s = 0.0;
  for (const auto& [k, C] : f.coeffs()) s += opnorm(C) * std::exp(kTwoPi * l1(k) * h);
  return s;
}

double tail_norm_h(const TorusMatrix& f, double h, int N) {
  double s = 0.0;
  for (const auto& [k, C] : f.coeffs())
    if (l1(k) > N) s += opnorm(C) * std::exp(kTwoPi * l1(k) * h);
  return s;
}

}  // namespace qpkam
