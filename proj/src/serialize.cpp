#include "qpkam/serialize.hpp"

namespace qpkam {

json to_json(const Mat& A) {
  json re = json::array(), im = json::array();
  for (int i = 0; i < A.rows(); ++i) {
    json r = json::array(), c = json::array();
    for (int j = 0; j < A.cols(); ++j) {
      r.push_back(A(i, j).real());
      c.push_back(A(i, j).imag());
    }
    re.push_back(r);
    im.push_back(c);
  }
  return json{{"re", re}, {"im", im}};
}

Mat mat_from_json(const json& j) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im"))
    throw Error(ErrorKind::Schema, "matrix needs re and im arrays");
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || !im.is_array() || re.size() != im.size())
    throw Error(ErrorKind::Schema, "matrix re/im shape mismatch");
  const int rows = static_cast<int>(re.size());
  const int cols = rows ? static_cast<int>(re[0].size()) : 0;
  Mat A(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (re[i].size() != static_cast<size_t>(cols) || im[i].size() != static_cast<size_t>(cols))
      throw Error(ErrorKind::Schema, "ragged matrix rows");
    for (int k = 0; k < cols; ++k) A(i, k) = cplx(re[i][k].get<double>(), im[i][k].get<double>());
  }
  return A;
}

json to_json(const TorusMatrix& f) {
  json j;
  j["m"] = f.m();
  j["d"] = f.d();
  if (std::isfinite(f.h_nominal()))
    j["h"] = f.h_nominal();
  else
    j["h"] = nullptr;
  json cs = json::array();
  for (const auto& [k, C] : f.coeffs()) {
    json e = to_json(C);
    e["k"] = k;
    cs.push_back(e);
  }
  j["coeffs"] = cs;
  return j;
}

TorusMatrix torus_from_json(const json& j) {
  for (const char* key : {"m", "d", "coeffs", "h"})
    if (!j.contains(key)) throw Error(ErrorKind::Schema, std::string("torus matrix missing field ") + key);
  const int m = j.at("m").get<int>();
  const int d = j.at("d").get<int>();
  if (m < 1 || d < 1) throw Error(ErrorKind::Schema, "torus matrix needs m, d >= 1");
  double h = j.at("h").is_null() ? std::numeric_limits<double>::infinity() : j.at("h").get<double>();
  TorusMatrix f(m, d, h);
  for (const auto& e : j.at("coeffs")) {
    MultiIndex k = e.at("k").get<MultiIndex>();
    if (static_cast<int>(k.size()) != d) throw Error(ErrorKind::Schema, "frequency index has wrong length");
    Mat C = mat_from_json(e);
    if (C.rows() != m || C.cols() != m) throw Error(ErrorKind::Schema, "coefficient has wrong shape");
    if (f.has(k)) throw Error(ErrorKind::Schema, "duplicate frequency index");
    f.at(k) = C;
  }
  return f;
}

json to_json(const Frequency& w) {
  return json{{"alpha", w.alpha}, {"gamma", w.gamma}, {"tau", w.tau}, {"k_max_checked", w.k_max_checked}};
}

}  // namespace qpkam
