#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "fieldgen/diffusion.hpp"
#include "fieldgen/grid.hpp"
#include "fieldgen/models.hpp"
#include "fieldgen/schedulers.hpp"

namespace fieldgen {

struct TrainConfig {
  int iterations = 5000;
  int warmup = 250;
  double lr_min = 1e-6;
  double lr_max = 2e-4;
  int batch_size = 16;
  int val_every = 250;
  uint64_t seed = 0;
};

struct LossLogRow {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double bound_frac = 0.0;     // share of valid points on a bound (censored)
  double interior_frac = 0.0;  // share in the interior branch
};

void write_loss_log_csv(const std::vector<LossLogRow>& log, bool censored,
                        const std::string& path);

struct VaeTrainResult {
  std::shared_ptr<Vae> vae;  // weights of the best validation iteration
  std::vector<LossLogRow> log;
  double best_val_loss = 0.0;
  int best_iteration = -1;
};

// Trains on normalized data with one reparameterized draw per sample; keeps
// the parameter snapshot with the lowest validation loss (evaluated on a
// fixed noise draw every val_every iterations). Aborts on non-finite loss,
// reporting the iteration.
VaeTrainResult train_vae(const FieldBatch& train_norm, const FieldBatch& valid_norm,
                         const VaeConfig& vae_cfg, ReconLoss loss_kind,
                         const TrainConfig& cfg);

struct DiffusionTrainResult {
  std::shared_ptr<Denoiser> denoiser;
  AdaptiveScheduler scheduler{0.99, 1e-8};
  std::vector<LossLogRow> log;
  double best_val_loss = 0.0;
  int best_iteration = -1;
};

// Trains a v-prediction denoiser on pre-normalized fields [n][c][h][w] with
// stratified pseudo-times and the adaptive importance-sampling scheduler; the
// loss is masked to valid points at the training resolution.
DiffusionTrainResult train_diffusion(const std::vector<double>& z_train, int64_t n_train,
                                     const std::vector<double>& z_valid, int64_t n_valid,
                                     int channels, int h, int w,
                                     const std::vector<uint8_t>& mask,
                                     const DenoiserConfig& den_cfg,
                                     LossWeighting weighting, const TrainConfig& cfg);

// Mean-head latents of a normalized batch, flat [n][lc][h/2^d][w/2^d].
std::vector<double> encode_latents(const Vae& vae, const FieldBatch& normalized,
                                   int chunk = 64);

// ---- trained artifacts on disk (checkpoint format of the tensor module) ----

struct VaeArtifact {
  VaeConfig config;
  int data_channels = 5;
  ReconLoss loss_kind = ReconLoss::kGaussian;
  uint64_t dataset_fp = 0;
  std::shared_ptr<Vae> vae;

  uint64_t fingerprint() const;  // config + loss kind + dataset
};

void save_vae_artifact(const VaeArtifact& art, const std::string& path);
VaeArtifact load_vae_artifact(const std::string& path);

struct DiffusionArtifact {
  DenoiserConfig config;
  int channels = 5;
  bool data_space = false;
  uint64_t dataset_fp = 0;
  uint64_t vae_fp = 0;  // fingerprint of the paired VAE; 0 in data space
  LatentStats latent_stats;
  std::array<double, AdaptiveScheduler::kBins> scheduler_weights{};
  std::shared_ptr<Denoiser> denoiser;

  uint64_t fingerprint() const;
};

void save_diffusion_artifact(const DiffusionArtifact& art, const std::string& path);
DiffusionArtifact load_diffusion_artifact(const std::string& path);

}  // namespace fieldgen
