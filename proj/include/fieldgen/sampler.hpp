#pragma once

#include <functional>
#include <vector>

#include "fieldgen/distributions.hpp"
#include "fieldgen/grid.hpp"
#include "fieldgen/models.hpp"
#include "fieldgen/rng.hpp"
#include "fieldgen/schedulers.hpp"

namespace fieldgen {

// v-prediction evaluated without gradients on a flat [n][c][h][w] batch; all
// samples share the pseudo-time during sampling.
using SamplerModel = std::function<std::vector<double>(
    const std::vector<double>& z, double tau, double gamma)>;

// Score from the v parameterization: s = -(z + (alpha/sigma) v_hat).
// Throws for gamma >= 40 where sigma underflows.
std::vector<double> score_from_v(const std::vector<double>& z,
                                 const std::vector<double>& v_hat, double gamma);

// Appendix-style denoiser clipping: the denoised estimate is clipped into
// per-channel bounds before the score is recomputed from it.
void clip_denoiser_mode(std::vector<double>& denoised, const ChannelBounds& bounds,
                        int64_t channels, int64_t spatial);

struct SamplerConfig {
  int n_steps = 20;
  EdmSchedule schedule;
  bool clip_denoiser = false;
  ChannelBounds denoiser_bounds;  // normalized units, used with clip_denoiser
  uint64_t seed = 0;
  bool record_trajectory = false;  // keep per-node states (convergence tests)
};

// dz/dtau of the probability-flow ODE: -1/2 L'(tau) (z + score), with
// L'(tau) = d/dtau log(1+e^-gamma(tau)) taken from the schedule analytically.
// Increments *eval_counter per model call when provided.
std::vector<double> ode_rhs(const std::vector<double>& z, double tau,
                            const EdmSchedule& schedule, const SamplerModel& model,
                            const SamplerConfig& cfg, int64_t channels,
                            int64_t spatial, int64_t* eval_counter = nullptr);

struct SampleResult {
  std::vector<double> out;             // denoised output, [n][c][h][w]
  std::vector<double> initial;         // the N(0,I) draw the ODE started from
  std::vector<double> trajectory_end;  // state after the Heun steps, pre-denoise
  // With record_trajectory: state after Heun step i, i = 0..n_steps-1.
  std::vector<std::vector<double>> trajectory;
  int64_t model_evals = 0;
};

// Heun integration over the EDM grid from tau=1 (gamma_min) to tau=0
// (gamma_max), starting from z ~ N(0,I), followed by a single Euler denoise
// emitting D = alpha z - sigma v_hat at the final node. Exactly
// 2*n_steps + 1 model evaluations. Throws on non-finite states, naming the
// step index.
SampleResult heun_sample(const SamplerConfig& cfg, const SamplerModel& model,
                         int64_t n, int64_t channels, int64_t h, int64_t w,
                         Rng& rng);

// Full generation pipeline around a trained denoiser: sample latents,
// de-normalize the latent space, decode, de-normalize channels, clip to the
// physical bounds when the decoder was trained with censoring, zero out land.
struct GenerationSetup {
  const Denoiser* denoiser = nullptr;
  const Vae* vae = nullptr;  // nullptr = diffusion in data space (z = x)
  LatentStats latent_stats;  // empty mean/std = identity
  std::vector<ChannelSpec> specs;  // fitted, data units
  std::vector<uint8_t> mask;
  int h = 0, w = 0;
  bool censored_decoder = false;
  bool clip_output = false;  // clip a plain-Gaussian model's output anyway
  int batch_size = 32;
};

struct GenerationResult {
  FieldBatch batch;
  std::vector<double> per_sample_seconds;
  int64_t model_evals = 0;
};

GenerationResult generate(const GenerationSetup& setup, const SamplerConfig& cfg,
                          int n, Rng& rng);

}  // namespace fieldgen
