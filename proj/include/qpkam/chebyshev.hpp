#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qpkam/common.hpp"

namespace qpkam {

// Chebyshev-Lobatto interpolant on [a,b]. T needs T+T, T-T and T*cplx.
template <class T>
class ChebFamily {
 public:
  ChebFamily() = default;

  ChebFamily(double a, double b, std::vector<T> node_values) : a_(a), b_(b), vals_(std::move(node_values)) {
    if (vals_.size() < 2) throw Error(ErrorKind::Domain, "ChebFamily needs degree >= 1");
    if (!(b_ > a_)) throw Error(ErrorKind::Domain, "ChebFamily needs a < b");
    build_coeffs();
  }

  static std::vector<double> nodes(double a, double b, int degree) {
    std::vector<double> x(degree + 1);
    for (int k = 0; k <= degree; ++k)
      x[k] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(kPi * k / degree);
    return x;
  }

  template <class Fn>
  static ChebFamily sample(double a, double b, int degree, Fn&& f) {
    auto x = nodes(a, b, degree);
    std::vector<T> v;
    v.reserve(x.size());
    for (double xi : x) v.push_back(f(xi));
    return ChebFamily(a, b, std::move(v));
  }

  static ChebFamily from_coeffs(double a, double b, std::vector<T> c) {
    ChebFamily out;
    out.a_ = a;
    out.b_ = b;
    out.coef_ = std::move(c);
    int n = static_cast<int>(out.coef_.size()) - 1;
    auto x = nodes(a, b, n);
    out.vals_.reserve(n + 1);
    for (double xi : x) out.vals_.push_back(out.eval(cplx(xi, 0.0)));
    return out;
  }

  double a() const { return a_; }
  double b() const { return b_; }
  int degree() const { return static_cast<int>(vals_.size()) - 1; }
  bool empty() const { return vals_.empty(); }
  std::vector<double> node_points() const { return nodes(a_, b_, degree()); }
  const std::vector<T>& values() const { return vals_; }
  const std::vector<T>& coefficients() const { return coef_; }

  T eval(cplx z) const {
    const cplx t = (2.0 * z - (a_ + b_)) / (b_ - a_);
    const int n = static_cast<int>(coef_.size()) - 1;
    if (n == 0) return coef_[0];
    T bk1 = coef_[n] * cplx(0.0);
    T bk2 = bk1;
    for (int k = n; k >= 1; --k) {
      T bk = coef_[k] + bk1 * (2.0 * t) - bk2;
      bk2 = std::move(bk1);
      bk1 = std::move(bk);
    }
    return coef_[0] + bk1 * t - bk2;
  }
  T operator()(double x) const { return eval(cplx(x, 0.0)); }

  ChebFamily derivative() const {
    const int n = static_cast<int>(coef_.size()) - 1;
    std::vector<T> d(n + 1, coef_[0] * cplx(0.0));
    if (n >= 1) {
      // c'_{k-1} = c'_{k+1} + 2k c_k, with c_0 stored halved
      std::vector<T> dd(n + 2, coef_[0] * cplx(0.0));
      for (int k = n; k >= 1; --k) dd[k - 1] = dd[k + 1] + coef_[k] * cplx(2.0 * k);
      dd[0] = dd[0] * cplx(0.5);
      const double s = 2.0 / (b_ - a_);
      for (int k = 0; k <= n; ++k) d[k] = dd[k] * cplx(s);
    }
    return from_coeffs(a_, b_, std::move(d));
  }

  template <class U, class Fn>
  ChebFamily<U> map(Fn&& f) const {
    std::vector<U> out;
    out.reserve(vals_.size());
    for (const auto& v : vals_) out.push_back(f(v));
    return ChebFamily<U>(a_, b_, std::move(out));
  }

  // Re-interpolate on a sub-interval with the given degree.
  ChebFamily restrict_to(double a, double b, int degree) const {
    return sample(a, b, degree, [this](double x) { return eval(cplx(x, 0.0)); });
  }

 private:
  void build_coeffs() {
    const int n = static_cast<int>(vals_.size()) - 1;
    coef_.assign(n + 1, vals_[0] * cplx(0.0));
    for (int j = 0; j <= n; ++j) {
      T acc = vals_[0] * cplx(0.5);
      for (int k = 1; k < n; ++k) acc = acc + vals_[k] * cplx(std::cos(kPi * j * k / n));
      acc = acc + vals_[n] * cplx(0.5 * ((j % 2) ? -1.0 : 1.0));
      double w = 2.0 / n;
      if (j == 0 || j == n) w *= 0.5;
      coef_[j] = acc * cplx(w);
    }
  }

  double a_ = 0.0, b_ = 1.0;
  std::vector<T> vals_;
  std::vector<T> coef_;
};

using ScalarFamily = ChebFamily<cplx>;
using MatFamily = ChebFamily<Mat>;

// Ellipse with foci a,b whose semi-major axis is (b-a)/2 + delta; covers the complex delta-neighbourhood.
std::vector<cplx> bernstein_ellipse(double a, double b, double delta, int samples);

}  // namespace qpkam
