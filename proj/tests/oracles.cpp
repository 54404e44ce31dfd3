#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

namespace {

constexpr long double kSqrt2L = 1.41421356237309504880168872420969808L;
constexpr long double kLogSqrt2PiL = 0.91893853320467274178032973640561764L;

long double log_phi_erfcl(long double u) {
  return std::log(0.5L * erfcl(-u / kSqrt2L));
}

// Mills-ratio continued fraction for x > 0:
//   Phi(-x) = phi(x) / (x + 1/(x + 2/(x + 3/(...)))).
long double log_phi_mills(long double x, int depth) {
  long double tail = 0.0L;
  for (int k = depth; k >= 1; --k) tail = static_cast<long double>(k) / (x + tail);
  const long double log_phi_pdf = -0.5L * x * x - kLogSqrt2PiL;
  return log_phi_pdf - std::log(x + tail);
}

}  // namespace

OracleResult oracle_log_phi(double u) {
  OracleResult r;
  if (u >= -1.0) {
    r.value = static_cast<double>(log_phi_erfcl(static_cast<long double>(u)));
    r.method = "long-double erfc";
    r.error_bound = 1e-15;
    return r;
  }
  const long double x = -static_cast<long double>(u);
  const long double via_cf = log_phi_mills(x, 600);
  const long double via_erfc = log_phi_erfcl(static_cast<long double>(u));
  const long double rel =
      std::abs(via_cf - via_erfc) / std::max(std::abs(via_cf), 1e-30L);
  if (rel > 1e-13L)
    throw std::runtime_error("oracle_log_phi: reference routes disagree");
  r.value = static_cast<double>(via_cf);
  r.method = "Mills continued fraction, cross-checked against erfcl";
  r.error_bound = 1e-13;
  return r;
}

namespace {

double normal_pdf(double x, double mu, double s) {
  const double u = (x - mu) / s;
  return std::exp(-0.5 * u * u) / (s * 2.5066282746310005024157652848110453);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

OracleResult oracle_censored_normalization(double mu, double s, double lower,
                                           double upper) {
  if (!(s > 0.0)) throw std::runtime_error("oracle: scale must be positive");
  if (!(lower < upper)) throw std::runtime_error("oracle: bounds out of order");
  double total = 0.0;
  if (std::isfinite(lower))
    total += std::exp(oracle_log_phi((lower - mu) / s).value);
  if (std::isfinite(upper))
    total += std::exp(oracle_log_phi((mu - upper) / s).value);

  // Interior: clip the quadrature window to mu +- 12 s; the truncated tails
  // are below 1e-32 and inside the 1e-8 bound.
  const double a = std::max(std::isfinite(lower) ? lower : mu - 12.0 * s, mu - 12.0 * s);
  const double b = std::min(std::isfinite(upper) ? upper : mu + 12.0 * s, mu + 12.0 * s);
  if (b > a)
    total += integrate([&](double x) { return normal_pdf(x, mu, s); }, a, b, 1e-12);

  OracleResult r;
  r.value = total;
  r.method = "bound masses + adaptive Simpson";
  r.error_bound = 1e-8;
  return r;
}

OracleResult oracle_gaussian_pf_ode(double sigma0, double gamma_start,
                                    double gamma_end) {
  if (!(sigma0 > 0.0)) throw std::runtime_error("oracle: sigma0 must be positive");
  const auto variance = [sigma0](double gamma) {
    const double a2 = 1.0 / (1.0 + std::exp(-gamma));
    const double s2 = 1.0 / (1.0 + std::exp(gamma));
    return a2 * sigma0 * sigma0 + s2;
  };
  OracleResult r;
  r.value = std::sqrt(variance(gamma_end) / variance(gamma_start));
  r.method = "closed-form marginal-variance scaling";
  r.error_bound = 1e-14;
  return r;
}

TwoPassStats two_pass_stats(const std::vector<double>& values) {
  if (values.empty()) throw std::runtime_error("two_pass_stats: empty");
  TwoPassStats st;
  double sum = 0.0;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  st.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.std = std::sqrt(ss / static_cast<double>(values.size()));
  st.range = hi - lo;
  return st;
}

}  // namespace oracles
