#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpkam {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using json = nlohmann::json;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline const cplx kI{0.0, 1.0};

inline cplx expi2pi(double u) { return std::polar(1.0, kTwoPi * u); }

enum class ErrorKind {
  StripOverreach,
  Domain,
  SingularFactor,
  Overflow,
  DegreeCap,
  NearSingular,
  NotSeparated,
  DecompositionInstability,
  ResonanceBudget,
  ResonanceStructure,
  Precondition,
  Contract,
  InvalidCertificate,
  Schema,
  Diophantine,
  Divergence,
};

const char* kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, json witness = json::object())
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what),
        kind_(kind),
        witness_(std::move(witness)) {}
  ErrorKind kind() const { return kind_; }
  const json& witness() const { return witness_; }

 private:
  ErrorKind kind_;
  json witness_;
};

// Constant stored by its natural log. Values with |ln| >= 700 are reported log-only.
struct LogValue {
  double ln = 0.0;

  static LogValue of(double v) {
    if (!(v > 0)) throw Error(ErrorKind::Domain, "LogValue::of needs a positive value");
    return {std::log(v)};
  }
  static LogValue from_log(double l) { return {l}; }
  bool representable() const { return std::isfinite(ln) && std::abs(ln) < 700.0; }
  double value() const { return representable() ? std::exp(ln) : (ln > 0 ? HUGE_VAL : 0.0); }
  LogValue operator*(LogValue o) const { return {ln + o.ln}; }
  LogValue operator/(LogValue o) const { return {ln - o.ln}; }
  LogValue pow(double p) const { return {ln * p}; }
  bool operator<(LogValue o) const { return ln < o.ln; }
  bool operator<=(LogValue o) const { return ln <= o.ln; }
};

json to_json(const LogValue& v);

// ln(a - b) for a > b given as logs; returns -inf when the difference is not positive.
double log_sub(double la, double lb);
double log_add(double la, double lb);
double log_factorial(int n);
double log_binomial(int n, int k);

double opnorm(const Mat& A);

}  // namespace qpkam
