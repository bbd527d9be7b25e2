#pragma once

#include <limits>
#include <map>

#include "qpkam/frequency.hpp"

namespace qpkam {

// Matrix-valued trigonometric series on T^d, keyed by frequency.
class TorusMatrix {
 public:
  using Map = std::map<MultiIndex, Mat>;

  TorusMatrix() = default;
  TorusMatrix(int m, int d, double h_nominal = std::numeric_limits<double>::infinity())
      : m_(m), d_(d), h_(h_nominal) {}

  static TorusMatrix constant(const Mat& A, int d, double h = std::numeric_limits<double>::infinity());

  int m() const { return m_; }
  int d() const { return d_; }
  double h_nominal() const { return h_; }
  void set_h_nominal(double h) { h_ = h; }

  const Map& coeffs() const { return c_; }
  Map& coeffs() { return c_; }
  bool empty() const { return c_.empty(); }

  Mat& at(const MultiIndex& k);
  Mat coeff(const MultiIndex& k) const;
  bool has(const MultiIndex& k) const { return c_.count(k) != 0; }
  Mat mean() const { return coeff(MultiIndex(d_, 0)); }

  Mat eval(const std::vector<double>& theta) const;
  cplx eval_entry(int i, int j, const std::vector<double>& theta) const;

  int max_mode() const;

  TorusMatrix shifted(const Frequency& w) const;       // f(. + alpha)
  TorusMatrix mode_shifted(const MultiIndex& s) const;  // multiply by e^{2 pi i <s,theta>}
  TorusMatrix truncated(int N) const;                   // keep |k| <= N
  TorusMatrix tail(int N) const;                        // keep |k| > N
  void drop_small(double rel = 1e-18);

  TorusMatrix operator+(const TorusMatrix& o) const;
  TorusMatrix operator-(const TorusMatrix& o) const;
  TorusMatrix operator*(cplx s) const;
  TorusMatrix& operator+=(const TorusMatrix& o);
  TorusMatrix left(const Mat& P) const;   // P f
  TorusMatrix right(const Mat& P) const;  // f P
  TorusMatrix conj_by(const Mat& S, const Mat& Sinv) const { return left(Sinv).right(S); }
  TorusMatrix operator*(const TorusMatrix& o) const;  // pointwise product (convolution)

 private:
  int m_ = 0, d_ = 0;
  double h_ = std::numeric_limits<double>::infinity();
  Map c_;
};

// sum_k ||f^(k)||_2 e^{2 pi |k| h}
double norm_h(const TorusMatrix& f, double h);
double tail_norm_h(const TorusMatrix& f, double h, int N);

}  // namespace qpkam
