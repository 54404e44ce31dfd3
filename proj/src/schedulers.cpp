#include "fieldgen/schedulers.hpp"

#include <cmath>
#include <stdexcept>

namespace fieldgen {

namespace {
constexpr double kBinWidth =
    (AdaptiveScheduler::kGammaMax - AdaptiveScheduler::kGammaMin) /
    AdaptiveScheduler::kBins;
}

AdaptiveScheduler::AdaptiveScheduler(double ema_decay, double floor)
    : decay_(ema_decay), floor_(floor) {
  if (!(ema_decay > 0.0 && ema_decay < 1.0))
    throw std::runtime_error("AdaptiveScheduler: decay must be in (0,1)");
  if (!(floor > 0.0)) throw std::runtime_error("AdaptiveScheduler: floor must be > 0");
  weights_.fill(1.0);
}

double AdaptiveScheduler::effective(int bin) const {
  return weights_[static_cast<size_t>(bin)] > floor_
             ? weights_[static_cast<size_t>(bin)]
             : floor_;
}

double AdaptiveScheduler::total() const {
  double t = 0.0;
  for (int b = 0; b < kBins; ++b) t += effective(b);
  return t;
}

AdaptiveScheduler::Draw AdaptiveScheduler::gamma_of_tau(double tau) const {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::runtime_error("gamma_of_tau: tau must be in [0,1]");
  const double z = total();
  if (tau == 0.0) return {kGammaMax, effective(kBins - 1) / (z * kBinWidth)};
  if (tau == 1.0) return {kGammaMin, effective(0) / (z * kBinWidth)};
  const double target = tau * z;  // mass consumed from the gamma_max end
  double cum = 0.0;
  for (int i = 0; i < kBins; ++i) {
    const int b = kBins - 1 - i;
    const double we = effective(b);
    if (target <= cum + we || b == 0) {
      double frac = (target - cum) / we;
      if (frac < 0.0) frac = 0.0;
      if (frac > 1.0) frac = 1.0;
      return {kGammaMax - (static_cast<double>(i) + frac) * kBinWidth,
              we / (z * kBinWidth)};
    }
    cum += we;
  }
  return {kGammaMin, effective(0) / (z * kBinWidth)};  // unreachable
}

double AdaptiveScheduler::cdf(double gamma) const {
  if (gamma <= kGammaMin) return 0.0;
  if (gamma >= kGammaMax) return 1.0;
  const double z = total();
  const double pos = (gamma - kGammaMin) / kBinWidth;
  const int bin = std::min(kBins - 1, static_cast<int>(pos));
  double below = 0.0;
  for (int b = 0; b < bin; ++b) below += effective(b);
  below += (pos - static_cast<double>(bin)) * effective(bin);
  return below / z;
}

void AdaptiveScheduler::update(double gamma, double observed_loss) {
  if (!std::isfinite(observed_loss) || observed_loss < 0.0)
    throw std::runtime_error("AdaptiveScheduler::update: observed loss must be finite and >= 0");
  int bin = static_cast<int>((gamma - kGammaMin) / kBinWidth);
  if (bin < 0) bin = 0;
  if (bin >= kBins) bin = kBins - 1;
  weights_[static_cast<size_t>(bin)] =
      decay_ * weights_[static_cast<size_t>(bin)] + (1.0 - decay_) * observed_loss;
}

std::vector<double> edm_gammas(int n, double rho, double gamma_min, double gamma_max) {
  if (n < 1) throw std::runtime_error("edm_gammas: n >= 1 required");
  if (n == 1) return {gamma_min};
  const double a = std::exp(-gamma_min / (2.0 * rho));   // sigma_max^(1/rho)
  const double b = std::exp(-gamma_max / (2.0 * rho)) - a;
  std::vector<double> gammas(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n - 1);
    double g = -2.0 * rho * std::log(a + u * b);
    if (g < gamma_min) g = gamma_min;
    if (g > gamma_max) g = gamma_max;
    gammas[static_cast<size_t>(i)] = g;
  }
  gammas.front() = gamma_min;
  gammas.back() = gamma_max;
  return gammas;
}

double EdmSchedule::gamma_of_tau(double tau) const {
  const double a = std::exp(-gamma_min / (2.0 * rho));
  const double b = std::exp(-gamma_max / (2.0 * rho)) - a;
  double g = -2.0 * rho * std::log(a + (1.0 - tau) * b);
  if (g < gamma_min) g = gamma_min;
  if (g > gamma_max) g = gamma_max;
  return g;
}

double EdmSchedule::dgamma_dtau(double tau) const {
  const double a = std::exp(-gamma_min / (2.0 * rho));
  const double b = std::exp(-gamma_max / (2.0 * rho)) - a;
  return 2.0 * rho * b / (a + (1.0 - tau) * b);
}

double EdmSchedule::lprime(double tau) const {
  const double g = gamma_of_tau(tau);
  const double sigma2 = 1.0 / (1.0 + std::exp(g));
  return -dgamma_dtau(tau) * sigma2;
}

std::vector<double> EdmSchedule::taus() const {
  if (n_steps < 1) throw std::runtime_error("EdmSchedule: n_steps >= 1");
  std::vector<double> t(static_cast<size_t>(n_steps) + 1);
  for (int i = 0; i <= n_steps; ++i)
    t[static_cast<size_t>(i)] =
        1.0 - static_cast<double>(i) / static_cast<double>(n_steps);
  return t;
}

}  // namespace fieldgen
