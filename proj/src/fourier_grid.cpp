#include "qpkam/fourier_grid.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace qpkam {

namespace {

std::mutex plan_mutex;

// Plans are cached per (d, P, howmany, sign); execution through fftw_execute_dft is thread safe.
fftw_plan get_plan(int d, int P, int howmany, int sign) {
  static std::map<std::tuple<int, int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_tuple(d, P, howmany, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<int> n(d, P);
  int total = 1;
  for (int i = 0; i < d; ++i) total *= P;
  std::vector<fftw_complex> buf(static_cast<size_t>(total) * howmany);
  fftw_plan p = fftw_plan_many_dft(d, n.data(), howmany, buf.data(), nullptr, 1, total, buf.data(), nullptr, 1,
                                   total, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, p);
  return p;
}

}  // namespace

FourierGrid::FourierGrid(int d, int P) : d_(d), P_(P), total_(1) {
  if (P < 2) throw Error(ErrorKind::Domain, "grid needs P >= 2");
  for (int i = 0; i < d; ++i) total_ *= P;
}

int FourierGrid::size_for(int radius) {
  int P = 8;
  while (P < 4 * radius + 4) P *= 2;
  return P;
}

std::vector<double> FourierGrid::point(int idx) const {
  std::vector<double> th(d_);
  for (int a = d_ - 1; a >= 0; --a) {
    th[a] = static_cast<double>(idx % P_) / P_;
    idx /= P_;
  }
  return th;
}

int FourierGrid::index_of(const MultiIndex& k) const {
  int idx = 0;
  for (int a = 0; a < d_; ++a) idx = idx * P_ + ((k[a] % P_) + P_) % P_;
  return idx;
}

std::vector<Mat> FourierGrid::sample(const TorusMatrix& f) const {
  const int m = f.m();
  for (const auto& kv : f.coeffs())
    for (int v : kv.first)
      if (2 * std::abs(v) >= P_) throw Error(ErrorKind::Domain, "mode beyond grid Nyquist limit");
  const int howmany = m * m;
  std::vector<cplx> buf(static_cast<size_t>(total_) * howmany, 0.0);
  for (const auto& [k, C] : f.coeffs()) {
    int idx = index_of(k);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) buf[static_cast<size_t>(i + m * j) * total_ + idx] += C(i, j);
  }
  fftw_plan p = get_plan(d_, P_, howmany, FFTW_BACKWARD);
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(p, raw, raw);
  std::vector<Mat> out(total_, Mat(m, m));
  for (int t = 0; t < total_; ++t)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) out[t](i, j) = buf[static_cast<size_t>(i + m * j) * total_ + t];
  return out;
}

TorusMatrix FourierGrid::analyse(const std::vector<Mat>& values, int radius, double h_nominal) const {
  const int m = static_cast<int>(values.at(0).rows());
  const int howmany = m * m;
  std::vector<cplx> buf(static_cast<size_t>(total_) * howmany);
  for (int t = 0; t < total_; ++t)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) buf[static_cast<size_t>(i + m * j) * total_ + t] = values[t](i, j);
  fftw_plan p = get_plan(d_, P_, howmany, FFTW_FORWARD);
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(p, raw, raw);
  const double scale = 1.0 / total_;
  const int r = std::min(radius, (P_ - 1) / 2);
  TorusMatrix out(m, d_, h_nominal);
  for (const auto& k : l1_ball(d_, r)) {
    int idx = index_of(k);
    Mat C(m, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) C(i, j) = buf[static_cast<size_t>(i + m * j) * total_ + idx] * scale;
    out.coeffs().emplace(k, std::move(C));
  }
  return out;
}

}  // namespace qpkam
