#pragma once

#include <functional>
#include <vector>

#include "fieldgen/rng.hpp"
#include "fieldgen/tensor.hpp"

namespace fieldgen {

// Signal/noise amplitudes of the variance-preserving process at log-SNR
// gamma: alpha^2 = 1/(1+e^-gamma), sigma^2 = 1/(1+e^gamma).
struct AlphaSigma {
  double alpha;
  double sigma;
};
AlphaSigma gamma_to_alpha_sigma(double gamma);

// One (tau, gamma) draw from a training noise schedule, together with
// -dgamma/dtau at that point (1/p(gamma) for the adaptive scheduler).
struct NoisePoint {
  double tau;
  double gamma;
  double neg_dgamma_dtau;
};

// z_tau = alpha z_x + sigma eps, elementwise.
std::vector<double> forward_noise(const std::vector<double>& z_x, double gamma,
                                  const std::vector<double>& eps);
// v = alpha eps - sigma z_x.
std::vector<double> v_target(const std::vector<double>& z_x,
                             const std::vector<double>& eps, double gamma);
// D = alpha z_tau - sigma v_hat; exact inverse of the v parameterization.
std::vector<double> denoised_from_v(const std::vector<double>& z_tau,
                                    const std::vector<double>& v_hat, double gamma);

enum class LossWeighting { kElbo, kSigmoid };  // w=1, or w = exp(-gamma/2)
double loss_weight(LossWeighting weighting, double gamma);

// v-prediction model: batch of noised states [N,C,h,w] plus per-sample taus.
using VModel = std::function<ad::Tensor(const ad::Tensor& z_tau,
                                        const std::vector<double>& taus)>;

struct DiffusionLossResult {
  ad::Tensor loss;               // scalar, averaged over the batch
  std::vector<double> per_gamma; // gamma per sample
  std::vector<double> observed;  // weighted integrand per sample, for the
                                 // scheduler's per-bin moving averages
};

// v-form training loss, per sample:
//   w(gamma) * (-dgamma/dtau) * (e^-gamma + 1)^-1 * ||v - v_hat||^2
// summed over channels and (optionally masked) grid points, then averaged
// over the batch. `observed` carries the same product without -dgamma/dtau.
// Throws if the loss is non-finite.
DiffusionLossResult diffusion_loss(const ad::Tensor& z_x,
                                   const std::vector<NoisePoint>& points,
                                   const ad::Tensor& eps, const VModel& model,
                                   LossWeighting weighting,
                                   const ad::Tensor& mask = ad::Tensor());

// Equivalent z-form, w(gamma) * (-dgamma/dtau) * e^gamma * ||z_x - D||^2 with
// D recovered from the same v_hat; kept as the algebraic cross-check route.
DiffusionLossResult diffusion_loss_zform(const ad::Tensor& z_x,
                                         const std::vector<NoisePoint>& points,
                                         const ad::Tensor& eps, const VModel& model,
                                         LossWeighting weighting,
                                         const ad::Tensor& mask = ad::Tensor());

// KL between the fully noised state at gamma_min and the unit Gaussian prior,
// 1/2 sum [sigma1^2 + (alpha1 z)^2 - 1 - log sigma1^2] over all elements.
double prior_kl(const std::vector<double>& z_x, double gamma_min);

// Stratified pseudo-times: tau_b = (b + u_b)/B with independent u_b ~ U(0,1).
std::vector<double> stratified_times(int batch_size, Rng& rng);

}  // namespace fieldgen
