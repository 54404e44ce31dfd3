#include "fieldgen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fieldgen/checkpoint.hpp"
#include "fieldgen/rng.hpp"
#include "fourier.hpp"

namespace fieldgen {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

float to_f32(double v) { return static_cast<float>(v); }

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}

uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) fail(std::string("fgrd: truncated file while reading ") + what);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is, const char* what) {
  const uint32_t v = get_u32(is, what);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

const char* kChannelNames[5] = {"thickness", "concentration", "velocity_u",
                                "velocity_v", "damage"};

}  // namespace

FieldBatch FieldBatch::empty(int n, int k, int h, int w) {
  FieldBatch b;
  b.n = n;
  b.k = k;
  b.h = h;
  b.w = w;
  b.data.assign(static_cast<size_t>(n) * k * h * w, 0.0);
  b.mask.assign(static_cast<size_t>(h) * w, 1);
  b.channels.resize(static_cast<size_t>(k));
  return b;
}

int64_t FieldBatch::valid_count() const {
  int64_t c = 0;
  for (uint8_t m : mask) c += (m != 0);
  return c;
}

FieldBatch FieldBatch::subset(int start, int count) const {
  if (start < 0 || count < 0 || start + count > n) fail("subset: range out of bounds");
  FieldBatch b;
  b.n = count;
  b.k = k;
  b.h = h;
  b.w = w;
  b.mask = mask;
  b.channels = channels;
  b.data.assign(data.begin() + static_cast<size_t>(start) * sample_size(),
                data.begin() + static_cast<size_t>(start + count) * sample_size());
  return b;
}

void FieldBatch::canonicalize() {
  for (int s = 0; s < n; ++s)
    for (int c = 0; c < k; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (!valid(y, x)) at(s, c, y, x) = 0.0;
}

std::vector<ChannelSpec> fit_normalization(const FieldBatch& train) {
  if (train.n <= 0) fail("fit_normalization: empty batch");
  const int64_t valid = train.valid_count();
  if (valid == 0) fail("fit_normalization: mask has no valid point");

  std::vector<ChannelSpec> specs = train.channels;
  for (int c = 0; c < train.k; ++c) {
    double sum = 0.0;
    double lo = kInf, hi = -kInf;
    for (int s = 0; s < train.n; ++s)
      for (int y = 0; y < train.h; ++y)
        for (int x = 0; x < train.w; ++x) {
          if (!train.valid(y, x)) continue;
          const double v = train.at(s, c, y, x);
          sum += v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    const double count = static_cast<double>(valid) * train.n;
    const double mean = sum / count;
    double ss = 0.0;
    for (int s = 0; s < train.n; ++s)
      for (int y = 0; y < train.h; ++y)
        for (int x = 0; x < train.w; ++x) {
          if (!train.valid(y, x)) continue;
          const double d = train.at(s, c, y, x) - mean;
          ss += d * d;
        }
    const double std_dev = std::sqrt(ss / count);
    if (std_dev < 1e-12)
      fail("fit_normalization: zero variance in channel '" + specs[c].name + "'");
    specs[c].mean = mean;
    specs[c].std = std_dev;
    specs[c].range = hi - lo;
  }
  return specs;
}

FieldBatch normalize(const FieldBatch& batch, const std::vector<ChannelSpec>& specs) {
  if (static_cast<int>(specs.size()) != batch.k)
    fail("normalize: channel count mismatch");
  FieldBatch out = batch;
  for (int c = 0; c < batch.k; ++c) {
    const auto& sp = specs[c];
    if (!(sp.std > 0.0)) fail("normalize: specs not fitted (std <= 0)");
    for (int s = 0; s < batch.n; ++s)
      for (int y = 0; y < batch.h; ++y)
        for (int x = 0; x < batch.w; ++x)
          out.at(s, c, y, x) =
              batch.valid(y, x) ? (batch.at(s, c, y, x) - sp.mean) / sp.std : 0.0;
    ChannelSpec& nsp = out.channels[c];
    nsp = sp;
    nsp.lower = std::isfinite(sp.lower) ? (sp.lower - sp.mean) / sp.std : sp.lower;
    nsp.upper = std::isfinite(sp.upper) ? (sp.upper - sp.mean) / sp.std : sp.upper;
    nsp.mean = 0.0;
    nsp.std = 1.0;
    nsp.range = sp.range / sp.std;
  }
  return out;
}

FieldBatch denormalize(const FieldBatch& batch, const std::vector<ChannelSpec>& specs) {
  if (static_cast<int>(specs.size()) != batch.k)
    fail("denormalize: channel count mismatch");
  FieldBatch out = batch;
  for (int c = 0; c < batch.k; ++c) {
    const auto& sp = specs[c];
    for (int s = 0; s < batch.n; ++s)
      for (int y = 0; y < batch.h; ++y)
        for (int x = 0; x < batch.w; ++x)
          out.at(s, c, y, x) =
              batch.valid(y, x) ? batch.at(s, c, y, x) * sp.std + sp.mean : 0.0;
    out.channels[c] = sp;
  }
  return out;
}

// ---- synthetic generation ----

std::vector<uint8_t> make_land_mask(int h, int w, uint64_t seed) {
  Rng rng(seed ^ 0x6d61736bull);  // independent stream for the mask
  const int64_t total = static_cast<int64_t>(h) * w;
  std::vector<uint8_t> mask(static_cast<size_t>(total));

  struct Disk {
    double cy, cx, r;
  };
  const int n_disks = 1 + static_cast<int>(rng.below(3));
  std::vector<Disk> disks;
  for (int i = 0; i < n_disks; ++i)
    disks.push_back({rng.uniform(0.0, h - 1.0), rng.uniform(0.0, w - 1.0),
                     rng.uniform(0.10, 0.22) * std::min(h, w)});

  // Rescale radii until land coverage falls in [5%, 20%].
  for (int attempt = 0; attempt < 256; ++attempt) {
    int64_t land = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        bool inside = false;
        for (const auto& d : disks) {
          const double dy = y - d.cy, dx = x - d.cx;
          if (dy * dy + dx * dx <= d.r * d.r) {
            inside = true;
            break;
          }
        }
        mask[static_cast<size_t>(y) * w + x] = inside ? 0 : 1;
        land += inside;
      }
    const double frac = static_cast<double>(land) / static_cast<double>(total);
    if (frac >= 0.05 && frac <= 0.20) return mask;
    const double scale = frac < 0.05 ? 1.15 : 0.9;
    for (auto& d : disks) d.r *= scale;
  }
  fail("make_land_mask: could not reach target coverage");
}

namespace {

// Smooth Gaussian random field: white noise filtered in the Fourier domain
// with amplitude k^(exponent/2), standardized to mean 0 / std 1.
std::vector<double> spectral_field(int h, int w, double exponent, Rng& rng) {
  std::vector<std::complex<double>> noise(static_cast<size_t>(h) * w);
  for (auto& v : noise) v = rng.normal();
  std::vector<std::complex<double>> spec;
  detail::dft2d(noise, h, w, spec, false);
  for (int ky = 0; ky < h; ++ky)
    for (int kx = 0; kx < w; ++kx) {
      const int fy = ky <= h / 2 ? ky : ky - h;
      const int fx = kx <= w / 2 ? kx : kx - w;
      const double k = std::sqrt(static_cast<double>(fy) * fy + static_cast<double>(fx) * fx);
      const double amp = k > 0.0 ? std::pow(k, exponent / 2.0) : 0.0;
      spec[static_cast<size_t>(ky) * w + kx] *= amp;
    }
  std::vector<std::complex<double>> field;
  detail::dft2d(spec, h, w, field, true);

  std::vector<double> out(static_cast<size_t>(h) * w);
  double sum = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = field[i].real();
    sum += out[i];
  }
  const double mean = sum / static_cast<double>(out.size());
  double ss = 0.0;
  for (double v : out) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(out.size()));
  const double inv = sd > 0.0 ? 1.0 / sd : 1.0;
  for (auto& v : out) v = (v - mean) * inv;
  return out;
}

}  // namespace

FieldBatch generate_synthetic(const SyntheticConfig& cfg,
                              const std::vector<uint8_t>* mask_override) {
  if (cfg.h < 16 || cfg.w < 16) fail("generate_synthetic: grid must be at least 16x16");
  if (cfg.n <= 0) fail("generate_synthetic: need n >= 1");

  FieldBatch b = FieldBatch::empty(cfg.n, 5, cfg.h, cfg.w);
  b.mask = mask_override ? *mask_override : make_land_mask(cfg.h, cfg.w, cfg.seed);
  if (static_cast<int64_t>(b.mask.size()) != static_cast<int64_t>(cfg.h) * cfg.w)
    fail("generate_synthetic: mask size mismatch");

  for (int c = 0; c < 5; ++c) {
    b.channels[c].name = kChannelNames[c];
    b.channels[c].lower = -kInf;
    b.channels[c].upper = kInf;
  }
  b.channels[0].lower = 0.0;                            // thickness >= 0
  b.channels[1].lower = 0.0; b.channels[1].upper = 1.0; // concentration
  b.channels[4].lower = 0.0; b.channels[4].upper = 1.0; // damage

  Rng rng(cfg.seed);
  const int h = cfg.h, w = cfg.w;
  for (int s = 0; s < cfg.n; ++s) {
    const auto base = spectral_field(h, w, cfg.spectral_exponent, rng);
    const auto e1 = spectral_field(h, w, cfg.spectral_exponent, rng);
    const auto e2 = spectral_field(h, w, cfg.spectral_exponent, rng);
    const auto e3 = spectral_field(h, w, cfg.spectral_exponent, rng);
    const auto e4 = spectral_field(h, w, cfg.spectral_exponent, rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        if (!b.valid(y, x)) continue;
        const double thick = std::max(0.0, 1.1 * base[i] + 0.25);
        const double conc =
            std::clamp(0.55 * (0.8 * base[i] + 0.6 * e1[i]) + 0.55, 0.0, 1.0);
        const double dam =
            std::clamp(0.5 * (0.6 * base[i] + 0.8 * e4[i]) + 0.6, 0.0, 1.0);
        // Round through f32 so FGRD round trips are lossless.
        b.at(s, 0, y, x) = to_f32(thick);
        b.at(s, 1, y, x) = to_f32(conc);
        b.at(s, 2, y, x) = to_f32(0.4 * e2[i]);
        b.at(s, 3, y, x) = to_f32(0.4 * e3[i]);
        b.at(s, 4, y, x) = to_f32(dam);
      }
  }
  return b;
}

FieldBatch generate_synthetic(int n, int h, int w, uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.h = h;
  cfg.w = w;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

// ---- FGRD I/O ----

void save_fgrd(const FieldBatch& batch, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("fgrd: cannot open for write: " + path);
  os.write("FGRD", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<uint32_t>(batch.n));
  put_u32(os, static_cast<uint32_t>(batch.k));
  put_u32(os, static_cast<uint32_t>(batch.h));
  put_u32(os, static_cast<uint32_t>(batch.w));
  for (const auto& c : batch.channels) {
    uint8_t flags = 0;
    if (std::isfinite(c.lower)) flags |= 1;
    if (std::isfinite(c.upper)) flags |= 2;
    os.put(static_cast<char>(flags));
    put_f32(os, std::isfinite(c.lower) ? to_f32(c.lower) : 0.0f);
    put_f32(os, std::isfinite(c.upper) ? to_f32(c.upper) : 0.0f);
    put_f32(os, to_f32(c.mean));
    put_f32(os, to_f32(c.std));
    put_f32(os, to_f32(c.range));
  }
  os.write(reinterpret_cast<const char*>(batch.mask.data()),
           static_cast<std::streamsize>(batch.mask.size()));
  for (double v : batch.data) put_f32(os, to_f32(v));
  if (!os) fail("fgrd: write failed: " + path);
}

FieldBatch load_fgrd(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("fgrd: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FGRD", 4) != 0) fail("fgrd: bad magic in " + path);
  const uint32_t version = get_u32(is, "version");
  if (version != 1) fail("fgrd: unsupported version");
  const uint32_t n = get_u32(is, "N");
  const uint32_t k = get_u32(is, "K");
  const uint32_t h = get_u32(is, "H");
  const uint32_t w = get_u32(is, "W");
  const uint64_t total = static_cast<uint64_t>(n) * k * h * w;
  if (n == 0 || k == 0 || h == 0 || w == 0 || n > (1u << 24) || k > 1024 ||
      h > (1u << 16) || w > (1u << 16) || total > (uint64_t(1) << 34))
    fail("fgrd: dimension overflow");

  FieldBatch b = FieldBatch::empty(static_cast<int>(n), static_cast<int>(k),
                                   static_cast<int>(h), static_cast<int>(w));
  for (uint32_t c = 0; c < k; ++c) {
    int flags = is.get();
    if (flags < 0) fail("fgrd: truncated file while reading channel flags");
    const float lo = get_f32(is, "lower");
    const float hi = get_f32(is, "upper");
    auto& sp = b.channels[c];
    sp.name = c < 5 ? kChannelNames[c] : "channel" + std::to_string(c);
    sp.lower = (flags & 1) ? static_cast<double>(lo) : -kInf;
    sp.upper = (flags & 2) ? static_cast<double>(hi) : kInf;
    sp.mean = static_cast<double>(get_f32(is, "mean"));
    sp.std = static_cast<double>(get_f32(is, "std"));
    sp.range = static_cast<double>(get_f32(is, "range"));
    if (sp.lower >= sp.upper) fail("fgrd: channel bounds out of order");
  }
  is.read(reinterpret_cast<char*>(b.mask.data()),
          static_cast<std::streamsize>(b.mask.size()));
  if (!is) fail("fgrd: truncated file while reading mask");
  for (auto& m : b.mask)
    if (m > 1) fail("fgrd: mask bytes must be 0 or 1");
  for (uint64_t i = 0; i < total; ++i) b.data[i] = static_cast<double>(get_f32(is, "data"));
  // Canonical form: land holds exact zeros regardless of what the file said.
  b.canonicalize();
  return b;
}

uint64_t dataset_fingerprint(const FieldBatch& batch) {
  std::ostringstream os;
  os << batch.k << "x" << batch.h << "x" << batch.w << ";";
  for (const auto& c : batch.channels)
    os << c.name << "," << c.lower << "," << c.upper << "," << c.mean << ","
       << c.std << "," << c.range << ";";
  os.write(reinterpret_cast<const char*>(batch.mask.data()),
           static_cast<std::streamsize>(batch.mask.size()));
  return fingerprint64(os.str());
}

}  // namespace fieldgen
