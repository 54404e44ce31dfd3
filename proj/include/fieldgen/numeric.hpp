#pragma once

#include <cmath>
#include <limits>

namespace fieldgen {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLog2Pi = 1.837877066409345483560659472811235279;
inline constexpr double kHalfLog2Pi = 0.9189385332046727417803297364056176398;
inline constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490393;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log of the standard normal density.
inline double log_normal_pdf(double u) { return -0.5 * u * u - kHalfLog2Pi; }

// log Phi(u), finite for all |u| <= 38 or so. The complement form keeps
// precision for u > 0, erfc covers the midrange, and below u = -6 an
// asymptotic expansion of the Mills ratio takes over before erfc underflows
// (around u = -37.5).
inline double log_std_normal_cdf(double u) {
  if (u >= 0.0) {
    return std::log1p(-0.5 * std::erfc(u * kInvSqrt2));
  }
  if (u > -6.0) {
    return std::log(0.5 * std::erfc(-u * kInvSqrt2));
  }
  // Phi(u) = phi(u)/(-u) * (1 - 1/u^2 + 3/u^4 - 15/u^6 + ...), u < 0.
  const double inv_u2 = 1.0 / (u * u);
  double term = 1.0;
  double series = 0.0;
  static const double coeff[] = {-1.0, 3.0, -15.0, 105.0, -945.0, 10395.0, -135135.0};
  for (double c : coeff) {
    term *= inv_u2;
    series += c * term;
  }
  return log_normal_pdf(u) - std::log(-u) + std::log1p(series);
}

// d/du log Phi(u) = phi(u)/Phi(u), evaluated in log space to stay finite in
// the deep lower tail.
inline double d_log_std_normal_cdf(double u) {
  return std::exp(log_normal_pdf(u) - log_std_normal_cdf(u));
}

inline double std_normal_cdf(double u) { return 0.5 * std::erfc(-u * kInvSqrt2); }

// Exact gelu, x * Phi(x), and its derivative Phi(x) + x * phi(x).
inline double gelu(double x) { return x * std_normal_cdf(x); }

inline double d_gelu(double x) {
  return std_normal_cdf(x) + x * std::exp(log_normal_pdf(x));
}

}  // namespace fieldgen
