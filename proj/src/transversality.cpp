#include "qpkam/transversality.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>

#include "qpkam/poly.hpp"

namespace qpkam {

json to_json(const PyartliCert& p) {
  return json{{"C", p.C}, {"c", p.c}, {"r", p.r}, {"a", p.a}, {"b", p.b}, {"grid_certified", p.grid_certified}};
}

json to_json(const TransverseCert& t) {
  return json{{"M", to_json(t.M)}, {"delta", t.delta}, {"c", to_json(t.c)}, {"r", t.r}, {"a", t.a}, {"b", t.b}};
}

PyartliCert pyartli_from_transverse(const TransverseCert& t) {
  PyartliCert p;
  p.r = t.r;
  p.a = t.a;
  p.b = t.b;
  const double lnC = log_factorial(t.r + 1) + t.M.ln - std::min(0.0, (t.r + 1) * std::log(t.delta));
  p.C = std::exp(std::min(lnC, 700.0));
  p.c = t.c.value();
  return p;
}

namespace {

std::vector<ScalarFamily> derivatives(const ScalarFamily& f, int upto) {
  std::vector<ScalarFamily> d{f};
  for (int j = 1; j <= upto; ++j) d.push_back(d.back().derivative());
  return d;
}

}  // namespace

PyartliCert grid_certify(const ScalarFamily& f, int r, int samples, double slack) {
  auto d = derivatives(f, r + 1);
  double C = 0.0, c = HUGE_VAL;
  for (int i = 0; i < samples; ++i) {
    double x = f.a() + (f.b() - f.a()) * i / (samples - 1);
    double lo = 0.0;
    for (int j = 0; j <= r + 1; ++j) {
      double v = std::abs(d[j](x));
      C = std::max(C, v);
      if (j <= r) lo = std::max(lo, v);
    }
    c = std::min(c, lo);
  }
  PyartliCert p;
  p.C = C * (1.0 + slack);
  p.c = c * (1.0 - slack);
  p.r = r;
  p.a = f.a();
  p.b = f.b();
  p.grid_certified = true;
  return p;
}

std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> out;
  for (const auto& I : v) {
    if (!out.empty() && I.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, I.hi);
    else
      out.push_back(I);
  }
  return out;
}

namespace {

struct Segmenter {
  const std::vector<ScalarFamily>& d;
  const PyartliCert& cert;
  double sigma;
  ExclusionResult& out;

  // Grid root-bracketing on [lo,hi] using the derivative bound for the gaps.
  void fallback(double lo, double hi) {
    out.grid_certified = true;
    const int n = 4096;
    const double h = (hi - lo) / n;
    const double pad = cert.C * h;
    int run_start = -1;
    for (int i = 0; i <= n + 1; ++i) {
      bool low = false;
      if (i <= n) low = std::abs(d[0](lo + i * h)) < sigma + pad;
      if (low && run_start < 0) run_start = i;
      if (!low && run_start >= 0) {
        Interval I{std::max(lo, lo + (run_start - 1) * h), std::min(hi, lo + i * h)};
        out.intervals.push_back(I);
        run_start = -1;
      }
    }
  }

  double ft(double x, int order, cplx rot) const { return std::real(rot * d[order](x)); }

  // Sub-interval of comp where |g| < thr, g = Re(rot f^(order)) monotone on comp.
  bool band(double lo, double hi, int order, cplx rot, double thr, Interval& I, bool& ok) const {
    ok = true;
    const double mid = 0.5 * (lo + hi);
    const double s = ft(mid, order + 1, rot) >= 0 ? 1.0 : -1.0;
    auto g = [&](double x) { return s * ft(x, order, rot); };
    double prev = g(lo);
    for (int i = 1; i <= 16; ++i) {
      double v = g(lo + (hi - lo) * i / 16);
      if (v < prev - 1e-12 * (std::abs(prev) + thr)) {
        ok = false;
        return false;
      }
      prev = v;
    }
    const double glo = g(lo), ghi = g(hi);
    if (ghi <= -thr || glo >= thr) return false;
    boost::math::tools::eps_tolerance<double> tol(52);
    auto solve = [&](double target) {
      std::uintmax_t it = 200;
      auto r = boost::math::tools::bisect([&](double x) { return g(x) - target; }, lo, hi, tol, it);
      return 0.5 * (r.first + r.second);
    };
    double xl = glo > -thr ? lo : solve(-thr);
    double xr = ghi < thr ? hi : solve(thr);
    // widen by one ulp-scale step so endpoints stay inside the cover
    const double eps = 4e-16 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    I = Interval{std::max(lo, xl - eps), std::min(hi, xr + eps)};
    return I.hi > I.lo;
  }

  void run(double a, double b) {
    const double c = cert.c, C = cert.C;
    const int r = cert.r;
    const double seg = c / (2.0 * C);
    double pos = a;
    while (pos < b) {
      ++out.segments;
      const double probe_end = std::min(pos + seg, b);
      double x0 = 0.0;
      int r0 = 0;
      const int G = 64;
      for (int i = 1; i <= G && r0 == 0; ++i) {
        double x = pos + (probe_end - pos) * i / G;
        for (int j = 1; j <= r; ++j)
          if (std::abs(d[j](x)) >= c) {
            x0 = x;
            r0 = j;
            break;
          }
      }
      if (r0 == 0) {
        // every derivative below c: the certificate forces |f| >= c here; confirm on a grid
        const int n = 512;
        double mn = HUGE_VAL;
        for (int i = 0; i <= n; ++i) mn = std::min(mn, std::abs(d[0](pos + (probe_end - pos) * i / n)));
        if (!(mn >= sigma + c / 1024.0)) fallback(pos, probe_end);
        pos = probe_end;
        continue;
      }
      const double end = std::min(x0 + seg, b);
      const cplx rot = std::polar(1.0, -std::arg(d[r0](x0)));
      std::vector<std::pair<double, double>> comps{{pos, end}};
      std::vector<Interval> found;
      bool healthy = true;
      for (int t = 1; t <= r0 && healthy; ++t) {
        const int order = r0 - t;
        const double thr = 0.5 * c * std::pow(2.0 * sigma / c, static_cast<double>(t) / r0);
        std::vector<std::pair<double, double>> next;
        for (auto [lo, hi] : comps) {
          if (!(hi > lo)) continue;
          Interval I;
          bool ok = true;
          if (band(lo, hi, order, rot, thr, I, ok)) {
            found.push_back(I);
            if (I.lo > lo) next.emplace_back(lo, I.lo);
            if (I.hi < hi) next.emplace_back(I.hi, hi);
          } else if (!ok) {
            healthy = false;
            break;
          } else {
            next.emplace_back(lo, hi);
          }
        }
        comps = std::move(next);
      }
      if (healthy)
        out.intervals.insert(out.intervals.end(), found.begin(), found.end());
      else
        fallback(pos, end);
      pos = end;
    }
  }
};

}  // namespace

ExclusionResult exclude_small_values(const ScalarFamily& f, const PyartliCert& cert, double sigma) {
  if (!(sigma > 0) || sigma > 0.5 * cert.c * (1.0 + 1e-12)) {
    json w;
    w["sigma"] = sigma;
    w["c"] = cert.c;
    throw Error(ErrorKind::Domain, "exclusion threshold must satisfy 0 < sigma <= c/2", w);
  }
  if (!(cert.C > 0) || !(cert.c > 0) || cert.r < 0)
    throw Error(ErrorKind::InvalidCertificate, "Pyartli data must have C, c > 0 and r >= 0");
  if (cert.r == 0) {
    // |f| >= c > sigma everywhere
    ExclusionResult out;
    out.count_bound = 2.0 * cert.C * (std::min(cert.b, f.b()) - std::max(cert.a, f.a())) / cert.c + 1.0;
    return out;
  }
  auto d = derivatives(f, cert.r + 1);
  ExclusionResult out;
  const double a = std::max(cert.a, f.a()), b = std::min(cert.b, f.b());
  out.count_bound = std::pow(2.0, cert.r) * (2.0 * cert.C * (b - a) / cert.c + 1.0);
  out.length_bound = 2.0 * std::pow(2.0 * sigma / cert.c, 1.0 / cert.r);
  Segmenter s{d, cert, sigma, out};
  s.run(a, b);
  return out;
}

TransverseCert product_transversality(const std::vector<TransverseCert>& certs) {
  if (certs.empty()) throw Error(ErrorKind::Domain, "product of zero certificates");
  TransverseCert o = certs[0];
  int r = 0;
  double lnM = -HUGE_VAL, delta = HUGE_VAL, lnc = HUGE_VAL;
  for (const auto& t : certs) {
    lnM = std::max(lnM, t.M.ln);
    delta = std::min(delta, t.delta);
    lnc = std::min(lnc, t.c.ln);
    r += t.r;
    o.a = std::max(o.a, t.a);
    o.b = std::min(o.b, t.b);
  }
  const double l = static_cast<double>(certs.size());
  o.M = LogValue::from_log(l * lnM);
  o.delta = delta;
  o.r = r;
  double inner = lnc;
  if (r > 0) inner += r * l * (std::log(delta) - std::log(4.0 * r * r) - lnM);
  const double lnc_new = std::pow(l, r + 1.0) * inner;
  o.c = LogValue::from_log(std::min(lnc_new, lnc));
  return o;
}

TransverseCert factor_transversality(const TransverseCert& product, int l, LogValue M) {
  TransverseCert o = product;
  o.M = M;
  const double lnc = product.c.ln - product.r * l * (std::log(2.0 * l) + M.ln - std::log(product.delta));
  o.c = LogValue::from_log(std::min(lnc, product.c.ln));
  return o;
}

TransverseCert multiset_to_decomposition(const TransverseCert& cert, int l, int m, double R) {
  TransverseCert o = cert;
  const double r = cert.r, L = l;
  const double lnM = m * m * std::log(2.0 * R);
  o.M = LogValue::from_log(lnM);
  const double inner =
      -r * std::pow(L, 4) * (std::log(4.0) + 4 * std::log(L) + 2 * std::log(r) + lnM - std::log(cert.delta)) +
      cert.c.ln;
  const double expo = std::pow(L, 2 * L * L * r + 2);
  o.c = LogValue::from_log(std::min(expo * inner, cert.c.ln));
  o.r = l * l * cert.r;
  return o;
}

TransverseCert decomposition_to_multiset(const TransverseCert& cert, int l, int m, double R) {
  TransverseCert o = cert;
  const double lnM = m * m * std::log(2.0 * R);
  o.M = LogValue::from_log(lnM);
  const double lnc =
      cert.c.ln - cert.r * l * l * (std::log(2.0) + 2 * std::log(double(l)) + lnM - std::log(cert.delta));
  o.c = LogValue::from_log(std::min(lnc, cert.c.ln));
  return o;
}

ScalarFamily chop(const ScalarFamily& f, double rel) {
  auto c = f.coefficients();
  double mx = 0.0;
  for (cplx z : c) mx = std::max(mx, std::abs(z));
  std::size_t n = c.size();
  while (n > 2 && std::abs(c[n - 1]) <= rel * mx) --n;
  if (n == c.size()) return f;
  c.resize(n);
  return ScalarFamily::from_coeffs(f.a(), f.b(), std::move(c));
}

ScalarFamily g_family(const MatFamily& A, double u, double a, double b, int degree) {
  return ScalarFamily::sample(a, b, degree, [&](double x) { return g_function(A(x), u); });
}

namespace {

int g_degree(const MatFamily& A) { return std::min(128, std::max(32, 2 * A.degree())); }

void scan_u(const MatFamily& A, double u, double a, double b, double delta, int r, int lambda_samples,
            TransversalityReport& rep) {
  const double lo = a - 0.5 * delta, hi = b + 0.5 * delta;
  auto g = g_family(A, u, lo, hi, g_degree(A));
  auto d = derivatives(g, r);
  for (int i = 0; i < lambda_samples; ++i) {
    double x = lo + (hi - lo) * i / std::max(1, lambda_samples - 1);
    double v = 0.0;
    for (int j = 0; j <= r; ++j) v = std::max(v, std::abs(d[j](x)));
    if (v < rep.min_sup) {
      rep.min_sup = v;
      rep.witness_lambda = x;
      rep.witness_u = u;
    }
  }
  for (cplx z : bernstein_ellipse(a, b, delta, 32)) rep.max_abs = std::max(rep.max_abs, std::abs(g.eval(z)));
}

}  // namespace

TransversalityReport transversality_at_u(const MatFamily& A, const TransverseCert& cert, double u,
                                         int lambda_samples) {
  TransversalityReport rep;
  rep.r = cert.r;
  scan_u(A, u, cert.a, cert.b, cert.delta, cert.r, lambda_samples, rep);
  rep.pass = rep.min_sup >= cert.c.value() && rep.max_abs <= cert.M.value() * (1 + 1e-9);
  return rep;
}

TransversalityReport multiset_transversality_check(const MatFamily& A, const TransverseCert& cert, int u_samples,
                                                   int lambda_samples) {
  TransversalityReport rep;
  rep.r = cert.r;
  for (int j = 0; j < u_samples; ++j)
    scan_u(A, static_cast<double>(j) / u_samples, cert.a, cert.b, cert.delta, cert.r, lambda_samples, rep);
  rep.pass = rep.min_sup >= cert.c.value() && rep.max_abs <= cert.M.value() * (1 + 1e-9);
  return rep;
}

EmpiricalTransversality fit_transversality(const MatFamily& A, double a, double b, double delta, int r_max,
                                           int u_samples, int lambda_samples, double floor) {
  EmpiricalTransversality out;
  for (int r = 1; r <= r_max; ++r) {
    TransversalityReport coarse, fine;
    coarse.r = fine.r = r;
    for (int j = 0; j < u_samples; ++j) {
      const double u = static_cast<double>(j) / u_samples;
      scan_u(A, u, a, b, delta, r, lambda_samples, coarse);
      scan_u(A, u, a, b, delta, r, 2 * lambda_samples + 1, fine);
    }
    out.M = std::max(out.M, fine.max_abs);
    // a zero of order > r shows up as a minimum that keeps shrinking with the grid step
    if (fine.min_sup >= floor && fine.min_sup >= 0.75 * coarse.min_sup) {
      out.r = r;
      out.c = 0.9 * fine.min_sup;
      out.M = 1.1 * fine.max_abs;
      out.found = true;
      return out;
    }
  }
  return out;
}

}  // namespace qpkam
