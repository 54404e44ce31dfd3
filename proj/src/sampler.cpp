#include "fieldgen/sampler.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fieldgen/diffusion.hpp"

namespace fieldgen {

std::vector<double> score_from_v(const std::vector<double>& z,
                                 const std::vector<double>& v_hat, double gamma) {
  if (z.size() != v_hat.size())
    throw std::runtime_error("score_from_v: shape mismatch");
  if (gamma >= 40.0)
    throw std::runtime_error("score_from_v: sigma underflows for gamma >= 40");
  const auto [alpha, sigma] = gamma_to_alpha_sigma(gamma);
  const double r = alpha / sigma;
  std::vector<double> s(z.size());
  for (size_t i = 0; i < z.size(); ++i) s[i] = -(z[i] + r * v_hat[i]);
  return s;
}

void clip_denoiser_mode(std::vector<double>& denoised, const ChannelBounds& bounds,
                        int64_t channels, int64_t spatial) {
  const int64_t n = static_cast<int64_t>(denoised.size()) / (channels * spatial);
  for (int64_t s = 0; s < n; ++s)
    for (int64_t c = 0; c < channels; ++c) {
      const double lo = bounds.lower[static_cast<size_t>(c)];
      const double hi = bounds.upper[static_cast<size_t>(c)];
      double* d = denoised.data() + (s * channels + c) * spatial;
      for (int64_t i = 0; i < spatial; ++i) d[i] = clip_value(d[i], lo, hi);
    }
}

std::vector<double> ode_rhs(const std::vector<double>& z, double tau,
                            const EdmSchedule& schedule, const SamplerModel& model,
                            const SamplerConfig& cfg, int64_t channels,
                            int64_t spatial, int64_t* eval_counter) {
  const double gamma = schedule.gamma_of_tau(tau);
  const double lp = schedule.lprime(tau);
  std::vector<double> v_hat = model(z, tau, gamma);
  if (eval_counter) ++(*eval_counter);
  if (v_hat.size() != z.size())
    throw std::runtime_error("ode_rhs: model output size mismatch");

  std::vector<double> score;
  if (cfg.clip_denoiser) {
    // Recover D, clip it, rebuild the score as (alpha D - z)/sigma^2.
    std::vector<double> denoised = denoised_from_v(z, v_hat, gamma);
    clip_denoiser_mode(denoised, cfg.denoiser_bounds, channels, spatial);
    const auto [alpha, sigma] = gamma_to_alpha_sigma(gamma);
    const double inv_s2 = 1.0 / (sigma * sigma);
    score.resize(z.size());
    for (size_t i = 0; i < z.size(); ++i)
      score[i] = (alpha * denoised[i] - z[i]) * inv_s2;
  } else {
    score = score_from_v(z, v_hat, gamma);
  }

  std::vector<double> rhs(z.size());
  for (size_t i = 0; i < z.size(); ++i) rhs[i] = -0.5 * lp * (z[i] + score[i]);
  return rhs;
}

SampleResult heun_sample(const SamplerConfig& cfg, const SamplerModel& model,
                         int64_t n, int64_t channels, int64_t h, int64_t w,
                         Rng& rng) {
  if (cfg.n_steps < 1) throw std::runtime_error("heun_sample: n_steps >= 1");
  EdmSchedule sched = cfg.schedule;
  sched.n_steps = cfg.n_steps;
  const std::vector<double> taus = sched.taus();
  const int64_t spatial = h * w;

  SampleResult result;
  std::vector<double>& z = result.out;
  z.resize(static_cast<size_t>(n * channels * spatial));
  for (auto& v : z) v = rng.normal();
  result.initial = z;

  const auto check_finite = [&](const std::vector<double>& state, int step) {
    for (double v : state)
      if (!std::isfinite(v))
        throw std::runtime_error("heun_sample: non-finite state at step " +
                                 std::to_string(step));
  };
  check_finite(z, 0);

  std::vector<double> zp(z.size());
  for (int i = 0; i < cfg.n_steps; ++i) {
    const double ta = taus[static_cast<size_t>(i)];
    const double tb = taus[static_cast<size_t>(i) + 1];
    const double step = tb - ta;
    const std::vector<double> d1 =
        ode_rhs(z, ta, sched, model, cfg, channels, spatial, &result.model_evals);
    for (size_t j = 0; j < z.size(); ++j) zp[j] = z[j] + step * d1[j];
    const std::vector<double> d2 =
        ode_rhs(zp, tb, sched, model, cfg, channels, spatial, &result.model_evals);
    for (size_t j = 0; j < z.size(); ++j) z[j] += 0.5 * step * (d1[j] + d2[j]);
    check_finite(z, i + 1);
    if (cfg.record_trajectory) result.trajectory.push_back(z);
  }

  result.trajectory_end = z;

  // Final Euler denoise: emit D(z, tau=0) at the clean end of the grid.
  const double tau_end = taus.back();
  const double gamma_end = sched.gamma_of_tau(tau_end);
  std::vector<double> v_hat = model(z, tau_end, gamma_end);
  ++result.model_evals;
  z = denoised_from_v(z, v_hat, gamma_end);
  if (cfg.clip_denoiser)
    clip_denoiser_mode(z, cfg.denoiser_bounds, channels, spatial);
  check_finite(z, cfg.n_steps + 1);
  return result;
}

GenerationResult generate(const GenerationSetup& setup, const SamplerConfig& cfg,
                          int n, Rng& rng) {
  if (!setup.denoiser) throw std::runtime_error("generate: denoiser required");
  const int k = static_cast<int>(setup.specs.size());
  if (k == 0) throw std::runtime_error("generate: channel specs required");
  const bool latent_space = setup.vae != nullptr;

  // Resolution the diffusion runs at.
  int dh = setup.h, dw = setup.w;
  int channels = k;
  std::vector<uint8_t> diff_mask = setup.mask;
  if (latent_space) {
    const int depth = setup.vae->config().depth;
    for (int i = 0; i < depth; ++i) {
      diff_mask = mask_downsample(diff_mask, dh, dw);
      dh /= 2;
      dw /= 2;
    }
    channels = setup.vae->config().latent_channels;
  }
  const MaskPyramid diff_masks =
      build_mask_pyramid(diff_mask, dh, dw, setup.denoiser->config().depth);
  const MaskPyramid data_masks = latent_space
      ? build_mask_pyramid(setup.mask, setup.h, setup.w, setup.vae->config().depth)
      : MaskPyramid{};

  const int64_t spatial = static_cast<int64_t>(dh) * dw;
  const SamplerModel model = [&](const std::vector<double>& z, double tau,
                                 double) {
    const int64_t m = static_cast<int64_t>(z.size()) / (channels * spatial);
    const ad::Tensor zt =
        ad::Tensor::from_values({m, channels, dh, dw}, z);
    const std::vector<double> taus(static_cast<size_t>(m), tau);
    return setup.denoiser->denoise_v(zt, taus, diff_masks).values();
  };

  GenerationResult result;
  FieldBatch out = FieldBatch::empty(n, k, setup.h, setup.w);
  out.mask = setup.mask;
  out.channels = setup.specs;

  const bool has_latent_stats = !setup.latent_stats.mean.empty();
  int done = 0;
  while (done < n) {
    const int m = std::min(setup.batch_size, n - done);
    const auto t0 = std::chrono::steady_clock::now();
    SampleResult sampled =
        heun_sample(cfg, model, m, channels, dh, dw, rng);
    result.model_evals += sampled.model_evals;

    std::vector<double> data;
    if (latent_space) {
      if (has_latent_stats)
        denormalize_latent(sampled.out, channels, spatial, setup.latent_stats);
      const ad::Tensor z =
          ad::Tensor::from_values({m, channels, dh, dw}, std::move(sampled.out));
      data = setup.vae->decode(z, data_masks).values();
    } else {
      data = std::move(sampled.out);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double seconds =
        std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(m);
    for (int i = 0; i < m; ++i) result.per_sample_seconds.push_back(seconds);

    std::copy(data.begin(), data.end(),
              out.data.begin() + static_cast<size_t>(done) * out.sample_size());
    done += m;
  }

  // Back to data units; normalized bounds map to the physical ones.
  out = denormalize(out, setup.specs);
  if (setup.censored_decoder || setup.clip_output) out = clip_to_bounds(out);
  out.canonicalize();
  result.batch = std::move(out);
  return result;
}

}  // namespace fieldgen
