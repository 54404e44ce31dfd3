#include "fieldgen/models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fieldgen/numeric.hpp"

namespace fieldgen {

using ad::Shape;
using ad::Tensor;

std::vector<uint8_t> mask_downsample(const std::vector<uint8_t>& mask, int h, int w) {
  if (h % 2 != 0 || w % 2 != 0)
    throw std::runtime_error("mask_downsample: dims must be even");
  if (static_cast<int64_t>(mask.size()) != static_cast<int64_t>(h) * w)
    throw std::runtime_error("mask_downsample: size mismatch");
  std::vector<uint8_t> out(static_cast<size_t>(h / 2) * (w / 2));
  for (int y = 0; y < h / 2; ++y)
    for (int x = 0; x < w / 2; ++x) {
      const uint8_t a = mask[static_cast<size_t>(2 * y) * w + 2 * x];
      const uint8_t b = mask[static_cast<size_t>(2 * y) * w + 2 * x + 1];
      const uint8_t c = mask[static_cast<size_t>(2 * y + 1) * w + 2 * x];
      const uint8_t d = mask[static_cast<size_t>(2 * y + 1) * w + 2 * x + 1];
      out[static_cast<size_t>(y) * (w / 2) + x] = (a | b | c | d) ? 1 : 0;
    }
  return out;
}

MaskPyramid build_mask_pyramid(const std::vector<uint8_t>& mask, int h, int w, int depth) {
  MaskPyramid p;
  std::vector<uint8_t> cur = mask;
  int ch = h, cw = w;
  for (int level = 0; level <= depth; ++level) {
    std::vector<double> vals(cur.begin(), cur.end());
    p.levels.push_back(Tensor::from_values({1, 1, ch, cw}, std::move(vals)));
    if (level < depth) {
      cur = mask_downsample(cur, ch, cw);
      ch /= 2;
      cw /= 2;
    }
  }
  return p;
}

ad::Tensor masked_conv(const Tensor& x, const Tensor& mask, const Tensor& w,
                       const Tensor& b, int stride, int pad) {
  const auto& xs = x.shape();
  if (mask.shape() != Shape{1, 1, xs[2], xs[3]})
    throw std::runtime_error("masked_conv: mask does not match spatial dims");
  const Tensor masked = ad::mul(x, ad::broadcast_to(mask, xs));
  return ad::conv2d(masked, w, b, stride, pad);
}

ad::Tensor time_embedding(const std::vector<double>& taus, int dim) {
  if (dim <= 0 || dim % 2 != 0)
    throw std::runtime_error("time_embedding: dim must be positive and even");
  const int64_t n = static_cast<int64_t>(taus.size());
  const int half = dim / 2;
  std::vector<double> vals(static_cast<size_t>(n) * dim);
  const double log_max = std::log(1000.0);
  for (int64_t s = 0; s < n; ++s) {
    for (int j = 0; j < half; ++j) {
      const double f = std::exp(log_max * static_cast<double>(j) / half);
      const double a = 2.0 * kPi * f * taus[static_cast<size_t>(s)];
      vals[static_cast<size_t>(s) * dim + 2 * j] = std::sin(a);
      vals[static_cast<size_t>(s) * dim + 2 * j + 1] = std::cos(a);
    }
  }
  return Tensor::from_values({n, dim}, std::move(vals));
}

namespace {

struct Conv {
  Tensor w, b;
  int stride = 1, pad = 0;
};

Conv make_conv(int ci, int co, int k, int stride, int pad, Rng& rng,
               ParamList& params, const std::string& name) {
  const double scale = std::sqrt(2.0 / (static_cast<double>(ci) * k * k));
  std::vector<double> wv(static_cast<size_t>(co) * ci * k * k);
  for (auto& v : wv) v = scale * rng.normal();
  Conv c;
  c.w = Tensor::from_values({co, ci, k, k}, std::move(wv), true);
  c.b = Tensor::zeros({co}, true);
  c.stride = stride;
  c.pad = pad;
  params.push_back({name + ".w", c.w});
  params.push_back({name + ".b", c.b});
  return c;
}

Tensor apply_masked(const Conv& c, const Tensor& x, const Tensor& mask) {
  return masked_conv(x, mask, c.w, c.b, c.stride, c.pad);
}

struct Linear {
  Tensor w, b;  // [in,out], [out]
};

Linear make_linear(int in, int out, Rng& rng, ParamList& params,
                   const std::string& name) {
  const double scale = std::sqrt(2.0 / static_cast<double>(in));
  std::vector<double> wv(static_cast<size_t>(in) * out);
  for (auto& v : wv) v = scale * rng.normal();
  Linear l;
  l.w = Tensor::from_values({in, out}, std::move(wv), true);
  l.b = Tensor::zeros({out}, true);
  params.push_back({name + ".w", l.w});
  params.push_back({name + ".b", l.b});
  return l;
}

Tensor apply(const Linear& l, const Tensor& x) {
  const int64_t n = x.dim(0), out = l.w.dim(1);
  return ad::add(ad::matmul(x, l.w),
                 ad::broadcast_to(ad::reshape(l.b, {1, out}), {n, out}));
}

// Residual block: masked 3x3 conv, optional per-channel time bias, gelu,
// pointwise projection, added back to the input.
struct Block {
  Conv spatial;    // 3x3
  Conv pointwise;  // 1x1
  Linear time;     // time features -> channel bias (denoiser only)
  bool has_time = false;
};

Block make_block(int c, int time_dim, Rng& rng, ParamList& params,
                 const std::string& name) {
  Block b;
  b.spatial = make_conv(c, c, 3, 1, 1, rng, params, name + ".conv");
  b.pointwise = make_conv(c, c, 1, 1, 0, rng, params, name + ".proj");
  if (time_dim > 0) {
    b.time = make_linear(time_dim, c, rng, params, name + ".time");
    b.has_time = true;
  }
  return b;
}

Tensor apply(const Block& b, const Tensor& x, const Tensor& mask,
             const Tensor* tfeat) {
  Tensor h = apply_masked(b.spatial, x, mask);
  if (b.has_time) {
    const auto& hs = h.shape();
    const Tensor bias = apply(b.time, *tfeat);  // [N,C]
    h = ad::add(h, ad::broadcast_to(ad::reshape(bias, {hs[0], hs[1], 1, 1}), hs));
  }
  h = ad::gelu(h);
  h = apply_masked(b.pointwise, h, mask);
  return ad::add(x, h);
}

}  // namespace

// ---- Vae ----

struct Vae::Impl {
  Conv enc_stem;
  std::vector<std::vector<Block>> enc_blocks;  // per level
  std::vector<Conv> enc_down;
  std::vector<Block> enc_bottom;
  Conv head_mu, head_logstd;

  Conv dec_stem;
  std::vector<Block> dec_bottom;
  std::vector<Conv> dec_up;                    // 3x3 after nearest upsample
  std::vector<std::vector<Block>> dec_blocks;  // per level, fine to coarse order reversed
  Conv dec_out;
};

Vae::Vae(const VaeConfig& cfg, int data_channels, uint64_t init_seed)
    : cfg_(cfg), data_channels_(data_channels), impl_(std::make_shared<Impl>()) {
  if (cfg.depth < 1) throw std::runtime_error("Vae: depth >= 1 required");
  Rng rng(init_seed);
  auto& im = *impl_;
  const int W = cfg.base_width;

  im.enc_stem = make_conv(data_channels, W, 1, 1, 0, rng, params_, "enc.stem");
  for (int l = 0; l < cfg.depth; ++l) {
    const int c = W << l;
    std::vector<Block> blocks;
    for (int i = 0; i < cfg.blocks_per_level; ++i)
      blocks.push_back(make_block(c, 0, rng, params_,
                                  "enc.l" + std::to_string(l) + ".b" + std::to_string(i)));
    im.enc_blocks.push_back(std::move(blocks));
    im.enc_down.push_back(
        make_conv(c, c * 2, 2, 2, 0, rng, params_, "enc.down" + std::to_string(l)));
  }
  const int cb = W << cfg.depth;
  for (int i = 0; i < cfg.blocks_per_level; ++i)
    im.enc_bottom.push_back(make_block(cb, 0, rng, params_, "enc.bottom.b" + std::to_string(i)));
  im.head_mu = make_conv(cb, cfg.latent_channels, 1, 1, 0, rng, params_, "enc.mu");
  im.head_logstd = make_conv(cb, cfg.latent_channels, 1, 1, 0, rng, params_, "enc.logstd");

  im.dec_stem = make_conv(cfg.latent_channels, cb, 1, 1, 0, rng, params_, "dec.stem");
  for (int i = 0; i < cfg.blocks_per_level; ++i)
    im.dec_bottom.push_back(make_block(cb, 0, rng, params_, "dec.bottom.b" + std::to_string(i)));
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int c = W << l;
    im.dec_up.push_back(
        make_conv(c * 2, c, 3, 1, 1, rng, params_, "dec.up" + std::to_string(l)));
    std::vector<Block> blocks;
    for (int i = 0; i < cfg.blocks_per_level; ++i)
      blocks.push_back(make_block(c, 0, rng, params_,
                                  "dec.l" + std::to_string(l) + ".b" + std::to_string(i)));
    im.dec_blocks.push_back(std::move(blocks));
  }
  im.dec_out = make_conv(W, data_channels, 1, 1, 0, rng, params_, "dec.out");

  log_s_ = Tensor::zeros({data_channels}, true);
  params_.push_back({"dec.log_s", log_s_});
}

std::pair<Tensor, Tensor> Vae::encode(const Tensor& x, const MaskPyramid& masks) const {
  const auto& im = *impl_;
  Tensor h = apply_masked(im.enc_stem, x, masks.at(0));
  for (int l = 0; l < cfg_.depth; ++l) {
    for (const auto& b : im.enc_blocks[static_cast<size_t>(l)])
      h = apply(b, h, masks.at(l), nullptr);
    h = apply_masked(im.enc_down[static_cast<size_t>(l)], h, masks.at(l));
  }
  for (const auto& b : im.enc_bottom) h = apply(b, h, masks.at(cfg_.depth), nullptr);
  h = ad::relu(h);
  Tensor mu = apply_masked(im.head_mu, h, masks.at(cfg_.depth));
  Tensor logstd = apply_masked(im.head_logstd, h, masks.at(cfg_.depth));
  return {mu, logstd};
}

Tensor Vae::decode(const Tensor& z, const MaskPyramid& masks) const {
  const auto& im = *impl_;
  Tensor h = apply_masked(im.dec_stem, z, masks.at(cfg_.depth));
  for (const auto& b : im.dec_bottom) h = apply(b, h, masks.at(cfg_.depth), nullptr);
  for (int i = 0; i < cfg_.depth; ++i) {
    const int level = cfg_.depth - 1 - i;  // target resolution level
    h = ad::upsample2x(h);
    h = apply_masked(im.dec_up[static_cast<size_t>(i)], h, masks.at(level));
    for (const auto& b : im.dec_blocks[static_cast<size_t>(i)])
      h = apply(b, h, masks.at(level), nullptr);
  }
  h = ad::relu(h);
  return apply_masked(im.dec_out, h, masks.at(0));
}

std::string Vae::config_string() const {
  std::ostringstream os;
  os << "vae;k=" << data_channels_ << ";lc=" << cfg_.latent_channels
     << ";w=" << cfg_.base_width << ";d=" << cfg_.depth
     << ";bpl=" << cfg_.blocks_per_level << ";beta=" << cfg_.beta;
  return os.str();
}

void Vae::save_into(Checkpoint& ck, const std::string& prefix) const {
  for (const auto& p : params_) ck.add(prefix + p.name, p.tensor);
}

void Vae::load_from(const Checkpoint& ck, const std::string& prefix) {
  for (auto& p : params_) {
    const Tensor* t = ck.find(prefix + p.name);
    if (!t) throw std::runtime_error("Vae::load_from: missing tensor " + p.name);
    if (t->shape() != p.tensor.shape())
      throw std::runtime_error("Vae::load_from: shape mismatch for " + p.name);
    p.tensor.values() = t->values();
  }
}

ad::Tensor gaussian_kl(const Tensor& mu, const Tensor& logstd) {
  const Tensor s2 = ad::exp(ad::affine(logstd, 2.0, 0.0));
  const Tensor term = ad::add(ad::add(s2, ad::mul(mu, mu)), ad::affine(logstd, -2.0, -1.0));
  return ad::affine(ad::sum_all(term), 0.5, 0.0);
}

VaeLossParts vae_loss(const Vae& vae, const Tensor& x, const MaskPyramid& masks,
                      const Tensor& eta, ReconLoss kind, const ChannelBounds& bounds,
                      double beta) {
  const int64_t n = x.dim(0);
  auto [mu_z, logstd_z] = vae.encode(x, masks);
  if (eta.shape() != mu_z.shape())
    throw std::runtime_error("vae_loss: eta must match the latent shape");
  const Tensor z = ad::add(mu_z, ad::mul(ad::exp(logstd_z), eta));
  const Tensor mu_dec = vae.decode(z, masks);

  VaeLossParts parts;
  Tensor recon;
  if (kind == ReconLoss::kGaussian) {
    recon = gaussian_nll(x, mu_dec, vae.log_s(), masks.at(0));
  } else {
    recon = censored_nll(x, mu_dec, vae.log_s(), bounds, masks.at(0), &parts.branches);
  }

  const Tensor kl = gaussian_kl(mu_z, logstd_z);

  const double inv_n = 1.0 / static_cast<double>(n);
  parts.total = ad::affine(ad::add(recon, ad::affine(kl, beta, 0.0)), inv_n, 0.0);
  parts.recon = recon.item() * inv_n;
  parts.kl = kl.item() * inv_n;
  return parts;
}

// ---- Denoiser ----

struct Denoiser::Impl {
  Linear time_mlp;
  Conv stem;
  std::vector<std::vector<Block>> down_blocks;
  std::vector<Conv> down;
  std::vector<Block> bottom;
  std::vector<Conv> up;  // 3x3 applied after upsample+skip concat
  std::vector<std::vector<Block>> up_blocks;
  Conv out;
};

Denoiser::Denoiser(const DenoiserConfig& cfg, int channels, uint64_t init_seed)
    : cfg_(cfg), channels_(channels), impl_(std::make_shared<Impl>()) {
  if (cfg.depth < 0) throw std::runtime_error("Denoiser: depth >= 0 required");
  if (cfg.time_embed_dim % 2 != 0)
    throw std::runtime_error("Denoiser: time_embed_dim must be even");
  Rng rng(init_seed ^ 0xd0e215e5ull);
  auto& im = *impl_;
  const int W = cfg.width;
  const int T = cfg.time_embed_dim;

  im.time_mlp = make_linear(T, T, rng, params_, "time.mlp");
  im.stem = make_conv(channels, W, 1, 1, 0, rng, params_, "stem");
  for (int l = 0; l < cfg.depth; ++l) {
    const int c = W << l;
    std::vector<Block> blocks;
    for (int i = 0; i < cfg.blocks_per_level; ++i)
      blocks.push_back(make_block(c, T, rng, params_,
                                  "down.l" + std::to_string(l) + ".b" + std::to_string(i)));
    im.down_blocks.push_back(std::move(blocks));
    im.down.push_back(make_conv(c, c * 2, 2, 2, 0, rng, params_, "down" + std::to_string(l)));
  }
  const int cb = W << cfg.depth;
  for (int i = 0; i < cfg.blocks_per_level; ++i)
    im.bottom.push_back(make_block(cb, T, rng, params_, "bottom.b" + std::to_string(i)));
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int c = W << l;
    // Upsampled features (2c) concatenated with the skip (c) -> 3c input.
    im.up.push_back(make_conv(3 * c, c, 3, 1, 1, rng, params_, "up" + std::to_string(l)));
    std::vector<Block> blocks;
    for (int i = 0; i < cfg.blocks_per_level; ++i)
      blocks.push_back(make_block(c, T, rng, params_,
                                  "up.l" + std::to_string(l) + ".b" + std::to_string(i)));
    im.up_blocks.push_back(std::move(blocks));
  }
  im.out = make_conv(W, channels, 1, 1, 0, rng, params_, "out");
}

Tensor Denoiser::denoise_v(const Tensor& z_tau, const std::vector<double>& taus,
                           const MaskPyramid& masks) const {
  const auto& im = *impl_;
  if (static_cast<int64_t>(taus.size()) != z_tau.dim(0))
    throw std::runtime_error("denoise_v: one tau per sample required");
  const Tensor tfeat = ad::gelu(apply(im.time_mlp, time_embedding(taus, cfg_.time_embed_dim)));

  Tensor h = apply_masked(im.stem, z_tau, masks.at(0));
  std::vector<Tensor> skips;
  for (int l = 0; l < cfg_.depth; ++l) {
    for (const auto& b : im.down_blocks[static_cast<size_t>(l)])
      h = apply(b, h, masks.at(l), &tfeat);
    skips.push_back(h);
    h = apply_masked(im.down[static_cast<size_t>(l)], h, masks.at(l));
  }
  for (const auto& b : im.bottom) h = apply(b, h, masks.at(cfg_.depth), &tfeat);
  for (int i = 0; i < cfg_.depth; ++i) {
    const int level = cfg_.depth - 1 - i;
    h = ad::upsample2x(h);
    h = ad::concat(h, skips[static_cast<size_t>(level)], 1);
    h = apply_masked(im.up[static_cast<size_t>(i)], h, masks.at(level));
    for (const auto& b : im.up_blocks[static_cast<size_t>(i)])
      h = apply(b, h, masks.at(level), &tfeat);
  }
  h = ad::relu(h);
  return apply_masked(im.out, h, masks.at(0));
}

std::string Denoiser::config_string() const {
  std::ostringstream os;
  os << "denoiser;c=" << channels_ << ";w=" << cfg_.width << ";d=" << cfg_.depth
     << ";bpl=" << cfg_.blocks_per_level << ";t=" << cfg_.time_embed_dim;
  return os.str();
}

void Denoiser::save_into(Checkpoint& ck, const std::string& prefix) const {
  for (const auto& p : params_) ck.add(prefix + p.name, p.tensor);
}

void Denoiser::load_from(const Checkpoint& ck, const std::string& prefix) {
  for (auto& p : params_) {
    const Tensor* t = ck.find(prefix + p.name);
    if (!t) throw std::runtime_error("Denoiser::load_from: missing tensor " + p.name);
    if (t->shape() != p.tensor.shape())
      throw std::runtime_error("Denoiser::load_from: shape mismatch for " + p.name);
    p.tensor.values() = t->values();
  }
}

// ---- latent statistics ----

LatentStats fit_latent_stats(const std::vector<double>& latents, int64_t n,
                             int64_t channels, int64_t spatial) {
  if (static_cast<int64_t>(latents.size()) != n * channels * spatial)
    throw std::runtime_error("fit_latent_stats: size mismatch");
  if (n * spatial < 2) throw std::runtime_error("fit_latent_stats: too few values");
  LatentStats st;
  st.mean.resize(static_cast<size_t>(channels));
  st.std.resize(static_cast<size_t>(channels));
  for (int64_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (int64_t s = 0; s < n; ++s)
      for (int64_t i = 0; i < spatial; ++i)
        sum += latents[static_cast<size_t>((s * channels + c) * spatial + i)];
    const double count = static_cast<double>(n * spatial);
    const double mean = sum / count;
    double ss = 0.0;
    for (int64_t s = 0; s < n; ++s)
      for (int64_t i = 0; i < spatial; ++i) {
        const double d =
            latents[static_cast<size_t>((s * channels + c) * spatial + i)] - mean;
        ss += d * d;
      }
    const double sd = std::sqrt(ss / count);
    if (sd < 1e-12)
      throw std::runtime_error("fit_latent_stats: zero variance in latent channel " +
                               std::to_string(c));
    st.mean[static_cast<size_t>(c)] = mean;
    st.std[static_cast<size_t>(c)] = sd;
  }
  return st;
}

void normalize_latent(std::vector<double>& z, int64_t channels, int64_t spatial,
                      const LatentStats& stats) {
  const int64_t n = static_cast<int64_t>(z.size()) / (channels * spatial);
  for (int64_t s = 0; s < n; ++s)
    for (int64_t c = 0; c < channels; ++c)
      for (int64_t i = 0; i < spatial; ++i) {
        auto& v = z[static_cast<size_t>((s * channels + c) * spatial + i)];
        v = (v - stats.mean[static_cast<size_t>(c)]) / stats.std[static_cast<size_t>(c)];
      }
}

void denormalize_latent(std::vector<double>& z, int64_t channels, int64_t spatial,
                        const LatentStats& stats) {
  const int64_t n = static_cast<int64_t>(z.size()) / (channels * spatial);
  for (int64_t s = 0; s < n; ++s)
    for (int64_t c = 0; c < channels; ++c)
      for (int64_t i = 0; i < spatial; ++i) {
        auto& v = z[static_cast<size_t>((s * channels + c) * spatial + i)];
        v = v * stats.std[static_cast<size_t>(c)] + stats.mean[static_cast<size_t>(c)];
      }
}

}  // namespace fieldgen
