#pragma once

#include <string>
#include <vector>

// Independent reference implementations used only by tests. None of these
// share code with the library paths they check.
namespace oracles {

struct OracleResult {
  double value = 0.0;
  std::string method;
  double error_bound = 0.0;  // estimated absolute or relative bound, documented
};

// log Phi(u) in extended precision, cross-validated between long-double erfc
// and a Mills-ratio continued fraction. Relative error bound < 1e-13 for
// |u| <= 40.
OracleResult oracle_log_phi(double u);

// Total probability of the censored Gaussian: point masses at the bounds plus
// adaptive-Simpson quadrature of the interior density. Bound < 1e-8.
OracleResult oracle_censored_normalization(double mu, double s, double lower,
                                           double upper);

// Closed-form solution of the probability-flow ODE for centered Gaussian data
// with std sigma0: z(tau) scales as sqrt(alpha^2 sigma0^2 + sigma^2). Returns
// the ratio z(gamma_end)/z(gamma_start).
OracleResult oracle_gaussian_pf_ode(double sigma0, double gamma_start,
                                    double gamma_end);

// Plain two-pass mean/std/range (population std) over a value list.
struct TwoPassStats {
  double mean = 0.0;
  double std = 0.0;
  double range = 0.0;
};
TwoPassStats two_pass_stats(const std::vector<double>& values);

}  // namespace oracles
