#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fieldgen/checkpoint.hpp"
#include "fieldgen/distributions.hpp"
#include "fieldgen/optim.hpp"
#include "fieldgen/rng.hpp"
#include "fieldgen/tensor.hpp"

namespace fieldgen {

// 2x2 max pooling of a validity mask: a window with any valid point stays
// valid. Input dims must be even.
std::vector<uint8_t> mask_downsample(const std::vector<uint8_t>& mask, int h, int w);

// Constant mask tensors [1,1,h,w] per resolution level; level 0 is full size.
struct MaskPyramid {
  std::vector<ad::Tensor> levels;
  const ad::Tensor& at(int level) const { return levels.at(static_cast<size_t>(level)); }
};
MaskPyramid build_mask_pyramid(const std::vector<uint8_t>& mask, int h, int w, int depth);

// Convolution with the input multiplied by the mask first, so land points act
// like zero padding and never feed values into the output.
ad::Tensor masked_conv(const ad::Tensor& x, const ad::Tensor& mask,
                       const ad::Tensor& w, const ad::Tensor& b, int stride, int pad);

// Sinusoidal features of the pseudo-time, [N, dim]: interleaved sin/cos pairs
// at log-spaced frequencies. dim must be even; ||emb||^2 = dim/2.
ad::Tensor time_embedding(const std::vector<double>& taus, int dim);

struct VaeConfig {
  int latent_channels = 8;
  int base_width = 32;
  int depth = 2;  // number of 2x downsamplings
  int blocks_per_level = 2;
  double beta = 1e-3;
};

enum class ReconLoss { kGaussian, kCensored };

// Convolutional beta-VAE over masked grids. The encoder emits mean and
// log-std heads at 1/2^depth resolution; the decoder mirrors it with
// nearest-neighbour upsampling followed by a smoothing masked convolution,
// and a relu stage before the final projection. The per-channel output scale
// log_s of the reconstruction likelihood is owned here as well.
class Vae {
 public:
  Vae(const VaeConfig& cfg, int data_channels, uint64_t init_seed);

  std::pair<ad::Tensor, ad::Tensor> encode(const ad::Tensor& x,
                                           const MaskPyramid& masks) const;
  ad::Tensor decode(const ad::Tensor& z, const MaskPyramid& masks) const;

  const ad::Tensor& log_s() const { return log_s_; }
  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }
  const VaeConfig& config() const { return cfg_; }
  int data_channels() const { return data_channels_; }

  std::string config_string() const;
  void save_into(Checkpoint& ck, const std::string& prefix = "") const;
  void load_from(const Checkpoint& ck, const std::string& prefix = "");

 private:
  struct Impl;
  VaeConfig cfg_;
  int data_channels_;
  ParamList params_;
  ad::Tensor log_s_;
  std::shared_ptr<Impl> impl_;
};

struct VaeLossParts {
  ad::Tensor total;  // scalar graph output: (recon + beta*kl) / batch
  double recon = 0.0;
  double kl = 0.0;
  CensoredBranchStats branches;
};

// Closed-form KL of N(mu, exp(logstd)^2) against N(0, I), summed over all
// elements: 1/2 sum [sigma^2 + mu^2 - 1 - 2 logstd].
ad::Tensor gaussian_kl(const ad::Tensor& mu, const ad::Tensor& logstd);

// One reparameterized latent draw z = mu + sigma*eta; closed-form Gaussian KL
// against the unit prior, downweighted by beta.
VaeLossParts vae_loss(const Vae& vae, const ad::Tensor& x, const MaskPyramid& masks,
                      const ad::Tensor& eta, ReconLoss kind,
                      const ChannelBounds& bounds, double beta);

struct DenoiserConfig {
  int width = 32;
  int depth = 1;  // downsamplings inside the denoiser
  int blocks_per_level = 2;
  int time_embed_dim = 64;
};

// v-prediction network: a small U-net of masked-conv residual blocks with the
// pseudo-time injected as a learned per-channel bias in every block, and skip
// connections concatenated before each upsampling convolution.
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& cfg, int channels, uint64_t init_seed);

  ad::Tensor denoise_v(const ad::Tensor& z_tau, const std::vector<double>& taus,
                       const MaskPyramid& masks) const;

  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }
  const DenoiserConfig& config() const { return cfg_; }
  int channels() const { return channels_; }

  std::string config_string() const;
  void save_into(Checkpoint& ck, const std::string& prefix = "") const;
  void load_from(const Checkpoint& ck, const std::string& prefix = "");

 private:
  struct Impl;
  DenoiserConfig cfg_;
  int channels_;
  ParamList params_;
  std::shared_ptr<Impl> impl_;
};

// Per-channel affine normalization of the latent space, fitted on training
// latents. Throws on a zero-variance channel.
struct LatentStats {
  std::vector<double> mean;
  std::vector<double> std;
};
LatentStats fit_latent_stats(const std::vector<double>& latents, int64_t n,
                             int64_t channels, int64_t spatial);
void normalize_latent(std::vector<double>& z, int64_t channels, int64_t spatial,
                      const LatentStats& stats);
void denormalize_latent(std::vector<double>& z, int64_t channels, int64_t spatial,
                        const LatentStats& stats);

}  // namespace fieldgen
