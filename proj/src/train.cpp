#include "fieldgen/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fieldgen/checkpoint.hpp"
#include "fieldgen/optim.hpp"

namespace fieldgen {

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

ad::Tensor gather_batch(const FieldBatch& data, const std::vector<int>& order,
                        int start, int count) {
  const int64_t per = data.sample_size();
  std::vector<double> vals(static_cast<size_t>(count) * per);
  for (int i = 0; i < count; ++i) {
    const int s = order[static_cast<size_t>(start + i)];
    std::copy_n(data.data.begin() + static_cast<size_t>(s) * per, per,
                vals.begin() + static_cast<size_t>(i) * per);
  }
  return ad::Tensor::from_values({count, data.k, data.h, data.w}, std::move(vals));
}

std::vector<double> snapshot(const ParamList& params) {
  std::vector<double> flat;
  for (const auto& p : params)
    flat.insert(flat.end(), p.tensor.values().begin(), p.tensor.values().end());
  return flat;
}

void restore(ParamList& params, const std::vector<double>& flat) {
  size_t off = 0;
  for (auto& p : params) {
    auto& v = p.tensor.values();
    std::copy_n(flat.begin() + off, v.size(), v.begin());
    off += v.size();
  }
}

ad::Tensor noise_like(const ad::Shape& shape, Rng& rng) {
  std::vector<double> vals(static_cast<size_t>(ad::shape_size(shape)));
  for (auto& v : vals) v = rng.normal();
  return ad::Tensor::from_values(shape, std::move(vals));
}

}  // namespace

void write_loss_log_csv(const std::vector<LossLogRow>& log, bool censored,
                        const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("loss log: cannot open " + path);
  os << std::setprecision(12);
  os << "iteration,lr,loss,recon,kl";
  if (censored) os << ",bound_frac,interior_frac";
  os << "\n";
  for (const auto& r : log) {
    os << r.iteration << "," << r.lr << "," << r.loss << "," << r.recon << ","
       << r.kl;
    if (censored) os << "," << r.bound_frac << "," << r.interior_frac;
    os << "\n";
  }
}

VaeTrainResult train_vae(const FieldBatch& train_norm, const FieldBatch& valid_norm,
                         const VaeConfig& vae_cfg, ReconLoss loss_kind,
                         const TrainConfig& cfg) {
  if (train_norm.n < 1 || valid_norm.n < 1)
    throw std::runtime_error("train_vae: empty split");
  const ChannelBounds bounds = ChannelBounds::from_specs(train_norm.channels);
  const MaskPyramid masks =
      build_mask_pyramid(train_norm.mask, train_norm.h, train_norm.w, vae_cfg.depth);

  VaeTrainResult result;
  result.vae = std::make_shared<Vae>(vae_cfg, train_norm.k, cfg.seed);
  Vae& vae = *result.vae;
  AdamState adam;
  adam.init(vae.params());

  Rng order_rng(cfg.seed ^ 0x0bdeull);
  Rng noise_rng(cfg.seed ^ 0x10deull);
  Rng val_rng(cfg.seed ^ 0x7a11ull);

  const int hl = train_norm.h >> vae_cfg.depth;
  const int wl = train_norm.w >> vae_cfg.depth;
  if (hl < 4 || wl < 4)
    throw std::runtime_error("train_vae: latent spatial size must be >= 4");

  // Fixed validation noise so the selection criterion is deterministic.
  const ad::Tensor val_eta = noise_like(
      {valid_norm.n, vae_cfg.latent_channels, hl, wl}, val_rng);
  const auto validate = [&]() {
    double total = 0.0;
    int done = 0;
    std::vector<int> ident(static_cast<size_t>(valid_norm.n));
    for (int i = 0; i < valid_norm.n; ++i) ident[static_cast<size_t>(i)] = i;
    while (done < valid_norm.n) {
      const int m = std::min(cfg.batch_size, valid_norm.n - done);
      const ad::Tensor x = gather_batch(valid_norm, ident, done, m);
      std::vector<double> ev(static_cast<size_t>(m) * vae_cfg.latent_channels * hl * wl);
      std::copy_n(val_eta.values().begin() +
                      static_cast<size_t>(done) * vae_cfg.latent_channels * hl * wl,
                  ev.size(), ev.begin());
      const ad::Tensor eta = ad::Tensor::from_values(
          {m, vae_cfg.latent_channels, hl, wl}, std::move(ev));
      VaeLossParts parts =
          vae_loss(vae, x, masks, eta, loss_kind, bounds, vae_cfg.beta);
      total += parts.total.item() * m;
      done += m;
    }
    return total / valid_norm.n;
  };

  std::vector<double> best_params = snapshot(vae.params());
  result.best_val_loss = validate();
  result.best_iteration = 0;

  std::vector<int> order = shuffled_indices(train_norm.n, order_rng);
  int cursor = 0;
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (cursor + cfg.batch_size > train_norm.n) {
      order = shuffled_indices(train_norm.n, order_rng);
      cursor = 0;
    }
    const int m = std::min(cfg.batch_size, train_norm.n);
    const ad::Tensor x = gather_batch(train_norm, order, cursor, m);
    cursor += m;

    const ad::Tensor eta =
        noise_like({m, vae_cfg.latent_channels, hl, wl}, noise_rng);
    for (auto& p : vae.params()) p.tensor.zero_grad();
    VaeLossParts parts = vae_loss(vae, x, masks, eta, loss_kind, bounds, vae_cfg.beta);
    const double loss_val = parts.total.item();
    if (!std::isfinite(loss_val))
      throw std::runtime_error("train_vae: non-finite loss at iteration " +
                               std::to_string(it));
    parts.total.backward();
    const double lr = lr_at(it, cfg.warmup, cfg.iterations, cfg.lr_min, cfg.lr_max);
    adam_step(vae.params(), adam, lr);

    LossLogRow row;
    row.iteration = it;
    row.lr = lr;
    row.loss = loss_val;
    row.recon = parts.recon;
    row.kl = parts.kl;
    if (loss_kind == ReconLoss::kCensored) {
      const double total_pts = static_cast<double>(
          parts.branches.at_lower + parts.branches.at_upper + parts.branches.interior);
      if (total_pts > 0) {
        row.bound_frac =
            static_cast<double>(parts.branches.at_lower + parts.branches.at_upper) /
            total_pts;
        row.interior_frac = static_cast<double>(parts.branches.interior) / total_pts;
      }
    }
    result.log.push_back(row);

    if (it % cfg.val_every == 0 || it == cfg.iterations) {
      const double val = validate();
      if (val < result.best_val_loss) {
        result.best_val_loss = val;
        result.best_iteration = it;
        best_params = snapshot(vae.params());
      }
    }
  }
  restore(vae.params(), best_params);
  return result;
}

DiffusionTrainResult train_diffusion(const std::vector<double>& z_train, int64_t n_train,
                                     const std::vector<double>& z_valid, int64_t n_valid,
                                     int channels, int h, int w,
                                     const std::vector<uint8_t>& mask,
                                     const DenoiserConfig& den_cfg,
                                     LossWeighting weighting, const TrainConfig& cfg) {
  const int64_t per = static_cast<int64_t>(channels) * h * w;
  if (n_train < 1 || static_cast<int64_t>(z_train.size()) != n_train * per)
    throw std::runtime_error("train_diffusion: bad training latents");
  if (n_valid < 1 || static_cast<int64_t>(z_valid.size()) != n_valid * per)
    throw std::runtime_error("train_diffusion: bad validation latents");

  DiffusionTrainResult result;
  result.denoiser = std::make_shared<Denoiser>(den_cfg, channels, cfg.seed);
  Denoiser& den = *result.denoiser;
  const MaskPyramid masks = build_mask_pyramid(mask, h, w, den_cfg.depth);
  AdamState adam;
  adam.init(den.params());

  Rng order_rng(cfg.seed ^ 0x0bdeull);
  Rng noise_rng(cfg.seed ^ 0x10deull);
  Rng tau_rng(cfg.seed ^ 0x7a05ull);
  Rng val_rng(cfg.seed ^ 0x7a11ull);

  const VModel model = [&](const ad::Tensor& z_tau, const std::vector<double>& taus) {
    return den.denoise_v(z_tau, taus, masks);
  };
  const ad::Tensor mask_t = masks.at(0);

  const auto gather = [&](const std::vector<double>& src, const std::vector<int>& order,
                          int start, int count) {
    std::vector<double> vals(static_cast<size_t>(count) * per);
    for (int i = 0; i < count; ++i)
      std::copy_n(src.begin() + static_cast<size_t>(order[static_cast<size_t>(start + i)]) * per,
                  per, vals.begin() + static_cast<size_t>(i) * per);
    return ad::Tensor::from_values({count, channels, h, w}, std::move(vals));
  };

  // Deterministic validation: fixed taus, eps, and uniform schedule points.
  std::vector<int> val_order(static_cast<size_t>(n_valid));
  for (int64_t i = 0; i < n_valid; ++i) val_order[static_cast<size_t>(i)] = static_cast<int>(i);
  std::vector<double> val_taus;
  std::vector<ad::Tensor> val_eps;
  {
    Rng r = val_rng;
    for (int64_t b = 0; b < n_valid; ++b)
      val_taus.push_back((static_cast<double>(b) + r.uniform()) / static_cast<double>(n_valid));
    for (int64_t start = 0; start < n_valid; start += cfg.batch_size) {
      const int m = static_cast<int>(std::min<int64_t>(cfg.batch_size, n_valid - start));
      val_eps.push_back(noise_like({m, channels, h, w}, r));
    }
  }
  const EdmSchedule uniform_ref;  // validation weighs with the fixed EDM mapping
  const auto validate = [&]() {
    double total = 0.0;
    int chunk = 0;
    for (int64_t start = 0; start < n_valid; start += cfg.batch_size, ++chunk) {
      const int m = static_cast<int>(std::min<int64_t>(cfg.batch_size, n_valid - start));
      const ad::Tensor zb = gather(z_valid, val_order, static_cast<int>(start), m);
      std::vector<NoisePoint> points;
      for (int i = 0; i < m; ++i) {
        const double tau = val_taus[static_cast<size_t>(start + i)];
        points.push_back({tau, uniform_ref.gamma_of_tau(tau),
                          -uniform_ref.dgamma_dtau(tau)});
      }
      DiffusionLossResult r = diffusion_loss(zb, points, val_eps[static_cast<size_t>(chunk)],
                                             model, weighting, mask_t);
      total += r.loss.item() * m;
    }
    return total / static_cast<double>(n_valid);
  };

  std::vector<double> best_params = snapshot(den.params());
  result.best_val_loss = validate();
  result.best_iteration = 0;

  std::vector<int> order = shuffled_indices(static_cast<int>(n_train), order_rng);
  int cursor = 0;
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (cursor + cfg.batch_size > n_train) {
      order = shuffled_indices(static_cast<int>(n_train), order_rng);
      cursor = 0;
    }
    const int m = static_cast<int>(std::min<int64_t>(cfg.batch_size, n_train));
    const ad::Tensor zb = gather(z_train, order, cursor, m);
    cursor += m;

    const std::vector<double> taus = stratified_times(m, tau_rng);
    std::vector<NoisePoint> points;
    for (double tau : taus) {
      const auto draw = result.scheduler.gamma_of_tau(tau);
      points.push_back({tau, draw.gamma, 1.0 / draw.density});
    }
    const ad::Tensor eps = noise_like({m, channels, h, w}, noise_rng);

    for (auto& p : den.params()) p.tensor.zero_grad();
    DiffusionLossResult r = diffusion_loss(zb, points, eps, model, weighting, mask_t);
    r.loss.backward();
    const double lr = lr_at(it, cfg.warmup, cfg.iterations, cfg.lr_min, cfg.lr_max);
    adam_step(den.params(), adam, lr);

    for (size_t b = 0; b < r.per_gamma.size(); ++b)
      result.scheduler.update(r.per_gamma[b], r.observed[b]);

    LossLogRow row;
    row.iteration = it;
    row.lr = lr;
    row.loss = r.loss.item();
    result.log.push_back(row);

    if (it % cfg.val_every == 0 || it == cfg.iterations) {
      const double val = validate();
      if (val < result.best_val_loss) {
        result.best_val_loss = val;
        result.best_iteration = it;
        best_params = snapshot(den.params());
      }
    }
  }
  restore(den.params(), best_params);
  return result;
}

std::vector<double> encode_latents(const Vae& vae, const FieldBatch& normalized,
                                   int chunk) {
  const int depth = vae.config().depth;
  const MaskPyramid masks =
      build_mask_pyramid(normalized.mask, normalized.h, normalized.w, depth);
  const int64_t dim = static_cast<int64_t>(vae.config().latent_channels) *
                      (normalized.h >> depth) * (normalized.w >> depth);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(normalized.n) * dim);
  for (int start = 0; start < normalized.n; start += chunk) {
    const int m = std::min(chunk, normalized.n - start);
    FieldBatch part = normalized.subset(start, m);
    const ad::Tensor x = ad::Tensor::from_values(
        {m, normalized.k, normalized.h, normalized.w}, std::move(part.data));
    const auto mu = vae.encode(x, masks).first.values();
    out.insert(out.end(), mu.begin(), mu.end());
  }
  return out;
}

// ---- artifacts ----

namespace {

std::string loss_kind_str(ReconLoss k) {
  return k == ReconLoss::kGaussian ? "gaussian" : "censored";
}

}  // namespace

uint64_t VaeArtifact::fingerprint() const {
  std::ostringstream os;
  os << vae->config_string() << ";loss=" << loss_kind_str(loss_kind)
     << ";dataset=" << dataset_fp;
  return fingerprint64(os.str());
}

void save_vae_artifact(const VaeArtifact& art, const std::string& path) {
  Checkpoint ck;
  ck.fingerprint = art.fingerprint();
  ck.add_scalar("meta.kind", 1.0);  // 1 = vae
  ck.add_scalar("meta.data_channels", art.data_channels);
  ck.add_scalar("meta.latent_channels", art.config.latent_channels);
  ck.add_scalar("meta.base_width", art.config.base_width);
  ck.add_scalar("meta.depth", art.config.depth);
  ck.add_scalar("meta.blocks_per_level", art.config.blocks_per_level);
  ck.add_scalar("meta.beta", art.config.beta);
  ck.add_scalar("meta.censored", art.loss_kind == ReconLoss::kCensored ? 1.0 : 0.0);
  ck.add_scalar("meta.dataset_fp", static_cast<double>(art.dataset_fp));
  art.vae->save_into(ck);
  save_checkpoint(ck, path);
}

VaeArtifact load_vae_artifact(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.scalar("meta.kind") != 1.0)
    throw std::runtime_error("load_vae_artifact: not a vae checkpoint");
  VaeArtifact art;
  art.data_channels = static_cast<int>(ck.scalar("meta.data_channels"));
  art.config.latent_channels = static_cast<int>(ck.scalar("meta.latent_channels"));
  art.config.base_width = static_cast<int>(ck.scalar("meta.base_width"));
  art.config.depth = static_cast<int>(ck.scalar("meta.depth"));
  art.config.blocks_per_level = static_cast<int>(ck.scalar("meta.blocks_per_level"));
  art.config.beta = ck.scalar("meta.beta");
  art.loss_kind = ck.scalar("meta.censored") != 0.0 ? ReconLoss::kCensored
                                                    : ReconLoss::kGaussian;
  art.dataset_fp = static_cast<uint64_t>(ck.scalar("meta.dataset_fp"));
  art.vae = std::make_shared<Vae>(art.config, art.data_channels, 0);
  art.vae->load_from(ck);
  if (art.fingerprint() != ck.fingerprint)
    throw std::runtime_error("load_vae_artifact: config fingerprint mismatch");
  return art;
}

uint64_t DiffusionArtifact::fingerprint() const {
  std::ostringstream os;
  os << denoiser->config_string() << ";space=" << (data_space ? "data" : "latent")
     << ";vae=" << vae_fp << ";dataset=" << dataset_fp;
  return fingerprint64(os.str());
}

void save_diffusion_artifact(const DiffusionArtifact& art, const std::string& path) {
  Checkpoint ck;
  ck.fingerprint = art.fingerprint();
  ck.add_scalar("meta.kind", 2.0);  // 2 = diffusion
  ck.add_scalar("meta.channels", art.channels);
  ck.add_scalar("meta.width", art.config.width);
  ck.add_scalar("meta.depth", art.config.depth);
  ck.add_scalar("meta.blocks_per_level", art.config.blocks_per_level);
  ck.add_scalar("meta.time_embed_dim", art.config.time_embed_dim);
  ck.add_scalar("meta.data_space", art.data_space ? 1.0 : 0.0);
  ck.add_scalar("meta.dataset_fp", static_cast<double>(art.dataset_fp));
  ck.add_scalar("meta.vae_fp", static_cast<double>(art.vae_fp));
  if (!art.latent_stats.mean.empty()) {
    const int64_t c = static_cast<int64_t>(art.latent_stats.mean.size());
    ck.add("latent.mean", ad::Tensor::from_values({c}, art.latent_stats.mean));
    ck.add("latent.std", ad::Tensor::from_values({c}, art.latent_stats.std));
  }
  ck.add("scheduler.weights",
         ad::Tensor::from_values({AdaptiveScheduler::kBins},
                                 std::vector<double>(art.scheduler_weights.begin(),
                                                     art.scheduler_weights.end())));
  art.denoiser->save_into(ck);
  save_checkpoint(ck, path);
}

DiffusionArtifact load_diffusion_artifact(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.scalar("meta.kind") != 2.0)
    throw std::runtime_error("load_diffusion_artifact: not a diffusion checkpoint");
  DiffusionArtifact art;
  art.channels = static_cast<int>(ck.scalar("meta.channels"));
  art.config.width = static_cast<int>(ck.scalar("meta.width"));
  art.config.depth = static_cast<int>(ck.scalar("meta.depth"));
  art.config.blocks_per_level = static_cast<int>(ck.scalar("meta.blocks_per_level"));
  art.config.time_embed_dim = static_cast<int>(ck.scalar("meta.time_embed_dim"));
  art.data_space = ck.scalar("meta.data_space") != 0.0;
  art.dataset_fp = static_cast<uint64_t>(ck.scalar("meta.dataset_fp"));
  art.vae_fp = static_cast<uint64_t>(ck.scalar("meta.vae_fp"));
  if (ck.has("latent.mean")) {
    art.latent_stats.mean = ck.find("latent.mean")->values();
    art.latent_stats.std = ck.find("latent.std")->values();
  }
  const auto& sw = ck.find("scheduler.weights")->values();
  std::copy(sw.begin(), sw.end(), art.scheduler_weights.begin());
  art.denoiser = std::make_shared<Denoiser>(art.config, art.channels, 0);
  art.denoiser->load_from(ck);
  if (art.fingerprint() != ck.fingerprint)
    throw std::runtime_error("load_diffusion_artifact: config fingerprint mismatch");
  return art;
}

}  // namespace fieldgen
