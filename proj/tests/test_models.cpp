#include "fieldgen/models.hpp"

#include "fieldgen/grid.hpp"
#include "fieldgen/numeric.hpp"
#include "fieldgen/rng.hpp"
#include "test_utils.hpp"

using namespace fieldgen;
using ad::Tensor;

namespace {

std::vector<uint8_t> random_mask(int h, int w, uint64_t seed, double land_frac) {
  Rng rng(seed);
  std::vector<uint8_t> m(static_cast<size_t>(h) * w, 1);
  for (auto& v : m)
    if (rng.uniform() < land_frac) v = 0;
  m[0] = 1;  // keep at least one valid point
  return m;
}

Tensor random_input(const ad::Shape& shape, const std::vector<uint8_t>& mask,
                    uint64_t seed) {
  Rng rng(seed);
  const int64_t hw = shape[2] * shape[3];
  std::vector<double> v(static_cast<size_t>(ad::shape_size(shape)));
  for (size_t i = 0; i < v.size(); ++i)
    v[i] = mask[i % hw] ? rng.normal() : 0.0;
  return Tensor::from_values(shape, std::move(v));
}

}  // namespace

static void test_masked_conv() {
  const int h = 6, w = 6;
  auto mask = random_mask(h, w, 3, 0.3);
  const auto mask_t = build_mask_pyramid(mask, h, w, 0).at(0);

  Rng rng(4);
  Tensor wgt = Tensor::zeros({2, 1, 3, 3});
  for (auto& v : wgt.values()) v = rng.normal();
  Tensor bias = Tensor::zeros({2});

  Tensor x1 = random_input({1, 1, h, w}, mask, 5);
  Tensor x2 = x1;
  // Alter values under mask==0 only.
  std::vector<double> perturbed = x1.values();
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      if (!mask[static_cast<size_t>(y) * w + xx])
        perturbed[static_cast<size_t>(y) * w + xx] = 99.0;
  Tensor xp = Tensor::from_values({1, 1, h, w}, std::move(perturbed));

  const auto out1 = masked_conv(x1, mask_t, wgt, bias, 1, 1).values();
  const auto out2 = masked_conv(xp, mask_t, wgt, bias, 1, 1).values();
  REQUIRE(out1 == out2, "land values never reach the output");

  // All-ones mask behaves like a plain convolution.
  std::vector<uint8_t> ones(static_cast<size_t>(h) * w, 1);
  const auto ones_t = build_mask_pyramid(ones, h, w, 0).at(0);
  const auto a = masked_conv(x1, ones_t, wgt, bias, 1, 1).values();
  const auto b = ad::conv2d(x1, wgt, bias, 1, 1).values();
  REQUIRE(a == b, "all-ones mask == ordinary conv");

  // Single valid pixel through a 3x3 averaging kernel: neighbours get v/9.
  std::vector<uint8_t> single(static_cast<size_t>(h) * w, 0);
  single[2 * w + 2] = 1;
  const auto single_t = build_mask_pyramid(single, h, w, 0).at(0);
  Tensor val = Tensor::zeros({1, 1, h, w});
  val.values()[2 * w + 2] = 4.5;
  Tensor avg = Tensor::full({1, 1, 3, 3}, 1.0 / 9.0);
  const auto out = masked_conv(val, single_t, avg, Tensor(), 1, 1).values();
  require_close(out[1 * w + 1], 0.5, 1e-15, "neighbour = value/9");
  require_close(out[2 * w + 3], 0.5, 1e-15, "neighbour = value/9");
  require_close(out[0], 0.0, 1e-15, "outside the kernel reach");
  pass("masked_conv");
}

static void test_mask_downsample() {
  std::vector<uint8_t> zeros(16, 0);
  REQUIRE(mask_downsample(zeros, 4, 4) == std::vector<uint8_t>(4, 0),
          "all-zero stays zero");

  std::vector<uint8_t> one(16, 0);
  one[5] = 1;  // inside window (1,1)->(2..3,2..3)? index 5 = row1,col1 -> window (0,0)
  auto down = mask_downsample(one, 4, 4);
  REQUIRE(down[0] == 1 && down[1] == 0 && down[2] == 0 && down[3] == 0,
          "window with one valid point becomes valid");

  std::vector<uint8_t> checker(16);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker[static_cast<size_t>(y) * 4 + x] = (y + x) % 2;
  REQUIRE(mask_downsample(checker, 4, 4) == std::vector<uint8_t>(4, 1),
          "checkerboard -> all valid");

  std::vector<uint8_t> odd(15, 1);
  REQUIRE_THROWS(mask_downsample(odd, 3, 5), "odd dims throw");
  pass("mask_downsample");
}

static void test_time_embedding() {
  const int dim = 64;
  const auto e0 = time_embedding({0.0}, dim).values();
  for (int j = 0; j < dim / 2; ++j) {
    REQUIRE(e0[static_cast<size_t>(2 * j)] == 0.0, "sin components zero at tau=0");
    REQUIRE(e0[static_cast<size_t>(2 * j + 1)] == 1.0, "cos components one at tau=0");
  }
  for (double tau : {0.1, 0.33, 0.77, 1.0}) {
    const auto e = time_embedding({tau}, dim).values();
    double norm2 = 0.0;
    for (double v : e) norm2 += v * v;
    require_close(norm2, dim / 2.0, 1e-9, "||emb||^2 = dim/2");
  }
  // Distinct taus differ in every frequency pair.
  const auto ea = time_embedding({0.3}, dim).values();
  const auto eb = time_embedding({0.7}, dim).values();
  for (int j = 0; j < dim / 2; ++j) {
    const double ds = std::abs(ea[static_cast<size_t>(2 * j)] - eb[static_cast<size_t>(2 * j)]);
    const double dc =
        std::abs(ea[static_cast<size_t>(2 * j + 1)] - eb[static_cast<size_t>(2 * j + 1)]);
    REQUIRE(std::max(ds, dc) > 1e-8, "embeddings differ at pair " + std::to_string(j));
  }
  REQUIRE_THROWS(time_embedding({0.5}, 7), "odd dim throws");
  pass("time_embedding");
}

static void test_vae_shapes_and_determinism() {
  VaeConfig cfg;
  cfg.latent_channels = 4;
  cfg.base_width = 8;
  cfg.depth = 2;
  cfg.blocks_per_level = 1;
  const int h = 16, w = 16, k = 5;
  const auto mask = random_mask(h, w, 6, 0.2);
  const MaskPyramid masks = build_mask_pyramid(mask, h, w, cfg.depth);
  Vae vae(cfg, k, 11);

  Tensor x = random_input({2, k, h, w}, mask, 7);
  auto [mu, logstd] = vae.encode(x, masks);
  REQUIRE((mu.shape() == ad::Shape{2, 4, 4, 4}), "latent mean shape H/2^depth");
  REQUIRE(logstd.shape() == mu.shape(), "log-std head same shape");
  for (double v : logstd.values())
    REQUIRE(std::isfinite(std::exp(v)) && std::exp(v) > 0.0, "sigma_z positive");

  auto [mu2, logstd2] = vae.encode(x, masks);
  REQUIRE(mu.values() == mu2.values() && logstd.values() == logstd2.values(),
          "encode deterministic");

  Tensor dec = vae.decode(mu, masks);
  REQUIRE((dec.shape() == ad::Shape{2, k, h, w}), "decode at full resolution");
  REQUIRE(vae.decode(mu, masks).values() == dec.values(), "decode deterministic");
  pass("vae shapes and determinism");
}

static void test_vae_loss_parts() {
  // Closed-form KL cases.
  require_close(gaussian_kl(Tensor::zeros({1}), Tensor::zeros({1})).item(), 0.0,
                0.0, "KL(N(0,1) || N(0,1)) = 0");
  require_close(gaussian_kl(Tensor::from_values({1}, {1.0}), Tensor::zeros({1})).item(),
                0.5, 1e-15, "KL at mu=1, sigma=1 is 1/2");

  VaeConfig cfg;
  cfg.latent_channels = 4;
  cfg.base_width = 8;
  cfg.depth = 1;
  cfg.blocks_per_level = 1;
  const int h = 8, w = 8, k = 2;
  std::vector<uint8_t> mask(static_cast<size_t>(h) * w, 1);
  const MaskPyramid masks = build_mask_pyramid(mask, h, w, cfg.depth);
  Vae vae(cfg, k, 11);
  Tensor x = random_input({2, k, h, w}, mask, 8);
  Tensor eta = random_input({2, 4, 4, 4}, std::vector<uint8_t>(16, 1), 9);
  const ChannelBounds bounds = ChannelBounds::unbounded(k);

  const auto b0 = vae_loss(vae, x, masks, eta, ReconLoss::kGaussian, bounds, 0.0);
  require_close(b0.total.item(), b0.recon, 1e-12, "beta=0 -> pure reconstruction");
  const auto b1 = vae_loss(vae, x, masks, eta, ReconLoss::kGaussian, bounds, 1e-3);
  require_close(b1.total.item(), b1.recon + 1e-3 * b1.kl, 1e-12,
                "beta scales the KL term");
  REQUIRE(b1.kl >= 0.0, "Gaussian KL nonnegative");
  pass("vae_loss parts");
}

static void test_masked_region_independence_end_to_end() {
  VaeConfig cfg;
  cfg.latent_channels = 4;
  cfg.base_width = 8;
  cfg.depth = 2;
  cfg.blocks_per_level = 1;
  const int h = 16, w = 16, k = 3;
  const auto mask = random_mask(h, w, 10, 0.25);
  const MaskPyramid masks = build_mask_pyramid(mask, h, w, cfg.depth);
  Vae vae(cfg, k, 12);

  Tensor x = random_input({2, k, h, w}, mask, 13);
  std::vector<double> pv = x.values();
  Rng rng(14);
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (size_t i = 0; i < pv.size(); ++i)
    if (!mask[i % hw]) pv[i] = rng.uniform(-50.0, 50.0);
  Tensor xp = Tensor::from_values({2, k, h, w}, std::move(pv));

  auto [mu_a, ls_a] = vae.encode(x, masks);
  auto [mu_b, ls_b] = vae.encode(xp, masks);
  REQUIRE(mu_a.values() == mu_b.values(), "encoder output bit-identical");
  REQUIRE(ls_a.values() == ls_b.values(), "encoder log-std bit-identical");

  Tensor eta = random_input({2, 4, 4, 4}, std::vector<uint8_t>(16, 1), 15);
  const ChannelBounds bounds = ChannelBounds::unbounded(k);
  const auto la = vae_loss(vae, x, masks, eta, ReconLoss::kGaussian, bounds, 1e-3);
  const auto lb = vae_loss(vae, xp, masks, eta, ReconLoss::kGaussian, bounds, 1e-3);
  REQUIRE(la.total.item() == lb.total.item(), "vae loss bit-identical");

  DenoiserConfig dcfg;
  dcfg.width = 8;
  dcfg.depth = 1;
  dcfg.blocks_per_level = 1;
  dcfg.time_embed_dim = 16;
  Denoiser den(dcfg, k, 16);
  const MaskPyramid dmasks = build_mask_pyramid(mask, h, w, dcfg.depth);
  const auto va = den.denoise_v(x, {0.3, 0.8}, dmasks).values();
  const auto vb = den.denoise_v(xp, {0.3, 0.8}, dmasks).values();
  REQUIRE(va == vb, "denoiser output bit-identical");
  pass("masked-region independence end-to-end");
}

static void test_denoiser_grad_check() {
  DenoiserConfig cfg;
  cfg.width = 6;
  cfg.depth = 1;
  cfg.blocks_per_level = 1;
  cfg.time_embed_dim = 8;
  const int h = 8, w = 8, k = 2;
  std::vector<uint8_t> mask(static_cast<size_t>(h) * w, 1);
  mask[3] = 0;
  const MaskPyramid masks = build_mask_pyramid(mask, h, w, cfg.depth);
  Denoiser den(cfg, k, 21);
  Tensor z = random_input({1, k, h, w}, mask, 22);
  const std::vector<double> taus{0.4};

  auto loss = [&]() {
    const Tensor v = den.denoise_v(z, taus, masks);
    return ad::mean_all(ad::mul(v, v));
  };
  const auto rep = grad_check(loss, den.params(), 1e-3, 6, 23);
  REQUIRE(rep.max_rel_err < 1e-3,
          "denoiser grad check, rel=" + std::to_string(rep.max_rel_err) + " at " +
              rep.worst_param);
  REQUIRE(den.denoise_v(z, taus, masks).shape() == z.shape(), "shape preserved");
  pass("denoiser grad check (rel < 1e-3)");
}

static void test_latent_stats() {
  Rng rng(24);
  const int64_t n = 50, c = 3, sp = 16;
  std::vector<double> lat(static_cast<size_t>(n * c * sp));
  for (int64_t s = 0; s < n; ++s)
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t i = 0; i < sp; ++i)
        lat[static_cast<size_t>((s * c + ch) * sp + i)] =
            2.0 * static_cast<double>(ch) + 0.5 * rng.normal();
  const auto stats = fit_latent_stats(lat, n, c, sp);

  std::vector<double> normed = lat;
  normalize_latent(normed, c, sp, stats);
  // Per-channel mean of the normalized latents vanishes.
  for (int64_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (int64_t s = 0; s < n; ++s)
      for (int64_t i = 0; i < sp; ++i)
        sum += normed[static_cast<size_t>((s * c + ch) * sp + i)];
    REQUIRE(std::abs(sum / static_cast<double>(n * sp)) < 1e-6,
            "normalized latent mean ~ 0");
  }
  denormalize_latent(normed, c, sp, stats);
  double max_diff = 0.0;
  for (size_t i = 0; i < lat.size(); ++i)
    max_diff = std::max(max_diff, std::abs(normed[i] - lat[i]));
  REQUIRE(max_diff < 1e-9, "latent normalization roundtrip");

  std::vector<double> constant(static_cast<size_t>(n * c * sp), 1.0);
  REQUIRE_THROWS(fit_latent_stats(constant, n, c, sp), "constant channel throws");
  pass("latent statistics");
}

int main() {
  test_masked_conv();
  test_mask_downsample();
  test_time_embedding();
  test_vae_shapes_and_determinism();
  test_vae_loss_parts();
  test_masked_region_independence_end_to_end();
  test_denoiser_grad_check();
  test_latent_stats();
  std::cout << "test_models: all sections passed\n";
  return 0;
}
