#pragma once

#include <array>
#include <vector>

namespace fieldgen {

// Training noise scheduler: 100 equal bins over [gamma_min, gamma_max], each
// holding an exponential moving average of the observed loss magnitude. The
// normalized histogram acts as an importance-sampling density p(gamma); the
// schedule gamma(tau) is its empirical quantile function, oriented from
// gamma_max at tau=0 down to gamma_min at tau=1, piecewise linear because the
// density is constant within each bin.
class AdaptiveScheduler {
 public:
  static constexpr int kBins = 100;
  static constexpr double kGammaMin = -15.0;
  static constexpr double kGammaMax = 15.0;

  explicit AdaptiveScheduler(double ema_decay = 0.99, double floor = 1e-8);

  struct Draw {
    double gamma;
    double density;  // p(gamma); the loss uses -dgamma/dtau = 1/p(gamma)
  };
  Draw gamma_of_tau(double tau) const;

  // Mass below gamma under the normalized histogram; cdf(gamma(tau)) = 1-tau.
  double cdf(double gamma) const;

  // bin(gamma) <- decay*old + (1-decay)*observed; gammas outside the range
  // update the corresponding edge bin. observed must be finite and >= 0.
  void update(double gamma, double observed_loss);

  const std::array<double, kBins>& weights() const { return weights_; }
  void set_weights(const std::array<double, kBins>& w) { weights_ = w; }
  double ema_decay() const { return decay_; }

 private:
  double effective(int bin) const;
  double total() const;

  std::array<double, kBins> weights_;
  double decay_;
  double floor_;
};

// Truncated EDM inference schedule. edm_gammas(n) returns n strictly
// increasing log-SNR values; index 0 is exactly gamma_min (the fully noised
// end, tau=1) and index n-1 exactly gamma_max:
//   sigma_i = (smax^(1/rho) + i/(n-1) * (smin^(1/rho) - smax^(1/rho)))^rho
//   gamma_i = -2 log sigma_i,  smax = e^(-gamma_min/2), smin = e^(-gamma_max/2)
std::vector<double> edm_gammas(int n, double rho = 7.0, double gamma_min = -15.0,
                               double gamma_max = 15.0);

// Continuous form of the same schedule plus the closed-form derivatives the
// probability-flow ODE needs.
struct EdmSchedule {
  int n_steps = 20;
  double rho = 7.0;
  double gamma_min = -15.0;
  double gamma_max = 15.0;

  double gamma_of_tau(double tau) const;
  double dgamma_dtau(double tau) const;
  // d/dtau log(1 + e^(-gamma(tau))) = -gamma'(tau) * sigma^2(gamma(tau)).
  double lprime(double tau) const;
  // Integration nodes tau_i = 1 - i/n_steps, i = 0..n_steps; gamma at the
  // nodes matches edm_gammas(n_steps + 1).
  std::vector<double> taus() const;
};

}  // namespace fieldgen
