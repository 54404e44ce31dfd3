#include "fieldgen/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace fieldgen {

using ad::Tensor;

AlphaSigma gamma_to_alpha_sigma(double gamma) {
  if (!std::isfinite(gamma))
    throw std::runtime_error("gamma_to_alpha_sigma: gamma must be finite");
  const double a2 = 1.0 / (1.0 + std::exp(-gamma));
  const double s2 = 1.0 / (1.0 + std::exp(gamma));
  return {std::sqrt(a2), std::sqrt(s2)};
}

std::vector<double> forward_noise(const std::vector<double>& z_x, double gamma,
                                  const std::vector<double>& eps) {
  if (z_x.size() != eps.size())
    throw std::runtime_error("forward_noise: shape mismatch");
  const auto [alpha, sigma] = gamma_to_alpha_sigma(gamma);
  std::vector<double> out(z_x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = alpha * z_x[i] + sigma * eps[i];
  return out;
}

std::vector<double> v_target(const std::vector<double>& z_x,
                             const std::vector<double>& eps, double gamma) {
  if (z_x.size() != eps.size())
    throw std::runtime_error("v_target: shape mismatch");
  const auto [alpha, sigma] = gamma_to_alpha_sigma(gamma);
  std::vector<double> out(z_x.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = alpha * eps[i] - sigma * z_x[i];
  return out;
}

std::vector<double> denoised_from_v(const std::vector<double>& z_tau,
                                    const std::vector<double>& v_hat, double gamma) {
  if (z_tau.size() != v_hat.size())
    throw std::runtime_error("denoised_from_v: shape mismatch");
  const auto [alpha, sigma] = gamma_to_alpha_sigma(gamma);
  std::vector<double> out(z_tau.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = alpha * z_tau[i] - sigma * v_hat[i];
  return out;
}

double loss_weight(LossWeighting weighting, double gamma) {
  return weighting == LossWeighting::kElbo ? 1.0 : std::exp(-0.5 * gamma);
}

namespace {

struct PerSample {
  std::vector<double> alpha, sigma;  // per sample
};

PerSample amplitudes(const std::vector<NoisePoint>& points) {
  PerSample p;
  for (const auto& pt : points) {
    const auto as = gamma_to_alpha_sigma(pt.gamma);
    p.alpha.push_back(as.alpha);
    p.sigma.push_back(as.sigma);
  }
  return p;
}

// Common setup shared by the two loss forms. Returns v_hat and the noised
// input; target construction differs per form.
struct LossSetup {
  Tensor z_tau;
  Tensor v_hat;
  int64_t n, c, h, w;
};

LossSetup loss_setup(const Tensor& z_x, const std::vector<NoisePoint>& points,
                     const Tensor& eps, const VModel& model, const PerSample& amp) {
  const auto& s = z_x.shape();
  if (s.size() != 4) throw std::runtime_error("diffusion_loss: z_x must be 4-d");
  if (eps.shape() != s) throw std::runtime_error("diffusion_loss: eps shape mismatch");
  const int64_t n = s[0];
  if (static_cast<int64_t>(points.size()) != n)
    throw std::runtime_error("diffusion_loss: one NoisePoint per sample required");

  const int64_t per = z_x.size() / n;
  std::vector<double> zt(static_cast<size_t>(z_x.size()));
  const auto& zv = z_x.values();
  const auto& ev = eps.values();
  for (int64_t b = 0; b < n; ++b)
    for (int64_t i = 0; i < per; ++i) {
      const size_t j = static_cast<size_t>(b * per + i);
      zt[j] = amp.alpha[b] * zv[j] + amp.sigma[b] * ev[j];
    }
  LossSetup setup;
  setup.z_tau = Tensor::from_values(s, std::move(zt));
  std::vector<double> taus;
  for (const auto& pt : points) taus.push_back(pt.tau);
  setup.v_hat = model(setup.z_tau, taus);
  if (setup.v_hat.shape() != s)
    throw std::runtime_error("diffusion_loss: model output shape mismatch");
  setup.n = n;
  setup.c = s[1];
  setup.h = s[2];
  setup.w = s[3];
  return setup;
}

Tensor mask_or_ones(const Tensor& mask, int64_t h, int64_t w) {
  if (!mask.defined()) return Tensor::full({1, 1, h, w}, 1.0);
  if (mask.shape() != ad::Shape{1, 1, h, w})
    throw std::runtime_error("diffusion_loss: mask must be [1,1,h,w]");
  return mask;
}

DiffusionLossResult finish_loss(const Tensor& sq, const Tensor& mask,
                                const std::vector<NoisePoint>& points,
                                LossWeighting weighting,
                                const std::vector<double>& coeff,
                                const std::vector<double>& observed_coeff,
                                int64_t n, int64_t c, int64_t h, int64_t w) {
  const Tensor m = ad::broadcast_to(mask_or_ones(mask, h, w), {n, c, h, w});
  const Tensor masked = ad::mul(m, sq);

  const Tensor coeff_t = ad::broadcast_to(
      ad::reshape(Tensor::from_values({n}, coeff), {n, 1, 1, 1}), {n, c, h, w});
  const Tensor weighted = ad::mul(coeff_t, masked);
  const Tensor loss = ad::affine(ad::sum_all(weighted), 1.0 / static_cast<double>(n), 0.0);
  if (!std::isfinite(loss.item()))
    throw std::runtime_error("diffusion_loss: non-finite loss");

  DiffusionLossResult result;
  result.loss = loss;
  const int64_t per = c * h * w;
  const auto& mv = masked.values();
  for (int64_t b = 0; b < n; ++b) {
    double s = 0.0;
    for (int64_t i = 0; i < per; ++i) s += mv[static_cast<size_t>(b * per + i)];
    result.observed.push_back(observed_coeff[static_cast<size_t>(b)] * s);
    result.per_gamma.push_back(points[static_cast<size_t>(b)].gamma);
  }
  (void)weighting;
  return result;
}

}  // namespace

DiffusionLossResult diffusion_loss(const Tensor& z_x,
                                   const std::vector<NoisePoint>& points,
                                   const Tensor& eps, const VModel& model,
                                   LossWeighting weighting, const Tensor& mask) {
  const PerSample amp = amplitudes(points);
  LossSetup s = loss_setup(z_x, points, eps, model, amp);

  // Constant v target.
  std::vector<double> vt(static_cast<size_t>(z_x.size()));
  const int64_t per = z_x.size() / s.n;
  const auto& zv = z_x.values();
  const auto& ev = eps.values();
  for (int64_t b = 0; b < s.n; ++b)
    for (int64_t i = 0; i < per; ++i) {
      const size_t j = static_cast<size_t>(b * per + i);
      vt[j] = amp.alpha[b] * ev[j] - amp.sigma[b] * zv[j];
    }
  const Tensor v = Tensor::from_values(z_x.shape(), std::move(vt));
  const Tensor diff = ad::sub(s.v_hat, v);
  const Tensor sq = ad::mul(diff, diff);

  std::vector<double> coeff, observed_coeff;
  for (const auto& pt : points) {
    const double w = loss_weight(weighting, pt.gamma);
    const double snr_term = 1.0 / (std::exp(-pt.gamma) + 1.0);
    coeff.push_back(w * pt.neg_dgamma_dtau * snr_term);
    observed_coeff.push_back(w * snr_term);
  }
  return finish_loss(sq, mask, points, weighting, coeff, observed_coeff, s.n,
                     s.c, s.h, s.w);
}

DiffusionLossResult diffusion_loss_zform(const Tensor& z_x,
                                         const std::vector<NoisePoint>& points,
                                         const Tensor& eps, const VModel& model,
                                         LossWeighting weighting, const Tensor& mask) {
  const PerSample amp = amplitudes(points);
  LossSetup s = loss_setup(z_x, points, eps, model, amp);

  // D = alpha z_tau - sigma v_hat, as a graph so both routes stay trainable.
  const int64_t n = s.n;
  std::vector<double> alpha_b(amp.alpha), sigma_neg(n);
  for (int64_t b = 0; b < n; ++b) sigma_neg[b] = -amp.sigma[b];
  const auto broadcast_coeff = [&](std::vector<double> c) {
    return ad::broadcast_to(ad::reshape(Tensor::from_values({n}, std::move(c)),
                                        {n, 1, 1, 1}),
                            z_x.shape());
  };
  const Tensor denoised =
      ad::add(ad::mul(broadcast_coeff(std::move(alpha_b)), s.z_tau),
              ad::mul(broadcast_coeff(std::move(sigma_neg)), s.v_hat));
  const Tensor diff = ad::sub(z_x, denoised);
  const Tensor sq = ad::mul(diff, diff);

  std::vector<double> coeff, observed_coeff;
  for (const auto& pt : points) {
    const double w = loss_weight(weighting, pt.gamma);
    const double eg = std::exp(pt.gamma);
    coeff.push_back(w * pt.neg_dgamma_dtau * eg);
    // Same integrand as the v-form: e^gamma ||z - D||^2 = (e^-gamma+1)^-1 ||v - v_hat||^2.
    observed_coeff.push_back(w * eg);
  }
  return finish_loss(sq, mask, points, weighting, coeff, observed_coeff, s.n,
                     s.c, s.h, s.w);
}

double prior_kl(const std::vector<double>& z_x, double gamma_min) {
  const auto [alpha, sigma] = gamma_to_alpha_sigma(gamma_min);
  const double s2 = sigma * sigma;
  const double log_s2 = std::log(s2);
  double kl = 0.0;
  for (double z : z_x) {
    const double az = alpha * z;
    kl += s2 + az * az - 1.0 - log_s2;
  }
  return 0.5 * kl;
}

std::vector<double> stratified_times(int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::runtime_error("stratified_times: batch_size >= 1");
  std::vector<double> taus(static_cast<size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b)
    taus[static_cast<size_t>(b)] =
        (static_cast<double>(b) + rng.uniform()) / static_cast<double>(batch_size);
  return taus;
}

}  // namespace fieldgen
