#include "fieldgen/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fourier.hpp"

namespace fieldgen {

namespace {

void check_paired(const FieldBatch& x, const FieldBatch& y, bool same_n) {
  if (x.k != y.k || x.h != y.h || x.w != y.w)
    throw std::runtime_error("metrics: batch geometry mismatch");
  if (same_n && x.n != y.n) throw std::runtime_error("metrics: sample count mismatch");
  if (x.mask != y.mask) throw std::runtime_error("metrics: masks differ");
  for (int c = 0; c < x.k; ++c)
    if (x.channels[c].name != y.channels[c].name ||
        x.channels[c].lower != y.channels[c].lower ||
        x.channels[c].upper != y.channels[c].upper)
      throw std::runtime_error("metrics: channel specs differ");
}

}  // namespace

double normalized_rmse(const FieldBatch& x, const FieldBatch& y,
                       std::vector<double>* per_channel) {
  check_paired(x, y, true);
  const int64_t valid = x.valid_count();
  if (valid == 0) throw std::runtime_error("normalized_rmse: empty mask");
  double total = 0.0;
  if (per_channel) per_channel->assign(static_cast<size_t>(x.k), 0.0);
  for (int c = 0; c < x.k; ++c) {
    const double sigma = x.channels[c].std;
    if (!(sigma > 0.0)) throw std::runtime_error("normalized_rmse: specs not fitted");
    double ss = 0.0;
    for (int s = 0; s < x.n; ++s)
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx) {
          if (!x.valid(yy, xx)) continue;
          const double d = (x.at(s, c, yy, xx) - y.at(s, c, yy, xx)) / sigma;
          ss += d * d;
        }
    const double mean_c = ss / (static_cast<double>(valid) * x.n);
    if (per_channel) (*per_channel)[static_cast<size_t>(c)] = std::sqrt(mean_c);
    total += ss;
  }
  return std::sqrt(total / (static_cast<double>(valid) * x.n * x.k));
}

double ssim(const FieldBatch& x, const FieldBatch& y,
            std::vector<double>* per_channel) {
  check_paired(x, y, true);
  constexpr int kHalf = 3;  // 7x7 window
  constexpr int kMinValid = 4;
  double total = 0.0;
  int64_t total_count = 0;
  if (per_channel) per_channel->assign(static_cast<size_t>(x.k), 0.0);

  for (int c = 0; c < x.k; ++c) {
    const double r = x.channels[c].range;
    const double c1 = (0.01 * r) * (0.01 * r);
    const double c2 = (0.03 * r) * (0.03 * r);
    double ch_sum = 0.0;
    int64_t ch_count = 0;
    for (int s = 0; s < x.n; ++s)
      for (int py = 0; py < x.h; ++py)
        for (int px = 0; px < x.w; ++px) {
          if (!x.valid(py, px)) continue;
          double sx = 0.0, sy = 0.0;
          int cnt = 0;
          for (int dy = -kHalf; dy <= kHalf; ++dy)
            for (int dx = -kHalf; dx <= kHalf; ++dx) {
              const int qy = py + dy, qx = px + dx;
              if (qy < 0 || qy >= x.h || qx < 0 || qx >= x.w) continue;
              if (!x.valid(qy, qx)) continue;
              sx += x.at(s, c, qy, qx);
              sy += y.at(s, c, qy, qx);
              ++cnt;
            }
          if (cnt < kMinValid) continue;
          const double mx = sx / cnt, my = sy / cnt;
          double vx = 0.0, vy = 0.0, vxy = 0.0;
          for (int dy = -kHalf; dy <= kHalf; ++dy)
            for (int dx = -kHalf; dx <= kHalf; ++dx) {
              const int qy = py + dy, qx = px + dx;
              if (qy < 0 || qy >= x.h || qx < 0 || qx >= x.w) continue;
              if (!x.valid(qy, qx)) continue;
              const double ax = x.at(s, c, qy, qx) - mx;
              const double ay = y.at(s, c, qy, qx) - my;
              vx += ax * ax;
              vy += ay * ay;
              vxy += ax * ay;
            }
          vx /= cnt;
          vy /= cnt;
          vxy /= cnt;
          const double num = (2.0 * mx * my + c1) * (2.0 * vxy + c2);
          const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
          ch_sum += num / den;
          ++ch_count;
        }
    if (per_channel && ch_count > 0)
      (*per_channel)[static_cast<size_t>(c)] = ch_sum / static_cast<double>(ch_count);
    total += ch_sum;
    total_count += ch_count;
  }
  if (total_count == 0) throw std::runtime_error("ssim: no usable windows");
  return total / static_cast<double>(total_count);
}

double acc_sie(const FieldBatch& x, const FieldBatch& y, double threshold) {
  check_paired(x, y, true);
  const int64_t valid = x.valid_count();
  if (valid == 0) throw std::runtime_error("acc_sie: empty mask");
  double acc_sum = 0.0;
  for (int s = 0; s < x.n; ++s) {
    int64_t agree = 0;
    for (int py = 0; py < x.h; ++py)
      for (int px = 0; px < x.w; ++px) {
        if (!x.valid(py, px)) continue;
        const bool a = x.at(s, 0, py, px) >= threshold;
        const bool b = y.at(s, 0, py, px) >= threshold;
        agree += (a == b);
      }
    acc_sum += static_cast<double>(agree) / static_cast<double>(valid);
  }
  return acc_sum / static_cast<double>(x.n);
}

namespace {

std::vector<double> coverage_probability(const FieldBatch& b, double threshold) {
  std::vector<double> p(static_cast<size_t>(b.h) * b.w, 0.0);
  for (int s = 0; s < b.n; ++s)
    for (int py = 0; py < b.h; ++py)
      for (int px = 0; px < b.w; ++px)
        if (b.valid(py, px) && b.at(s, 0, py, px) >= threshold)
          p[static_cast<size_t>(py) * b.w + px] += 1.0;
  for (auto& v : p) v /= static_cast<double>(b.n);
  return p;
}

}  // namespace

double rmse_sie(const FieldBatch& a, const FieldBatch& b, double threshold) {
  check_paired(a, b, false);
  if (a.n < 1 || b.n < 1) throw std::runtime_error("rmse_sie: empty set");
  const int64_t valid = a.valid_count();
  if (valid == 0) throw std::runtime_error("rmse_sie: empty mask");
  const auto pa = coverage_probability(a, threshold);
  const auto pb = coverage_probability(b, threshold);
  double ss = 0.0;
  for (int py = 0; py < a.h; ++py)
    for (int px = 0; px < a.w; ++px) {
      if (!a.valid(py, px)) continue;
      const double d = pa[static_cast<size_t>(py) * a.w + px] -
                       pb[static_cast<size_t>(py) * a.w + px];
      ss += d * d;
    }
  return std::sqrt(ss / static_cast<double>(valid));
}

namespace {

// Point-wise latent mean/std (sample std) of the encoder's mean head.
void latent_moments(const FieldBatch& set, const Vae& enc, std::vector<double>& mean,
                    std::vector<double>& sd) {
  if (set.n < 2) throw std::runtime_error("faed: sets need at least 2 elements");
  const int depth = enc.config().depth;
  const MaskPyramid masks = build_mask_pyramid(set.mask, set.h, set.w, depth);
  const int64_t dim = static_cast<int64_t>(enc.config().latent_channels) *
                      (set.h >> depth) * (set.w >> depth);
  mean.assign(static_cast<size_t>(dim), 0.0);
  sd.assign(static_cast<size_t>(dim), 0.0);
  std::vector<std::vector<double>> feats;
  const int chunk = 64;
  for (int start = 0; start < set.n; start += chunk) {
    const int m = std::min(chunk, set.n - start);
    FieldBatch part = set.subset(start, m);
    const ad::Tensor x = ad::Tensor::from_values(
        {m, set.k, set.h, set.w}, std::move(part.data));
    const auto mu = enc.encode(x, masks).first.values();
    for (int i = 0; i < m; ++i)
      feats.emplace_back(mu.begin() + static_cast<size_t>(i) * dim,
                         mu.begin() + static_cast<size_t>(i + 1) * dim);
  }
  for (const auto& f : feats)
    for (int64_t j = 0; j < dim; ++j) mean[static_cast<size_t>(j)] += f[static_cast<size_t>(j)];
  for (auto& v : mean) v /= static_cast<double>(set.n);
  for (const auto& f : feats)
    for (int64_t j = 0; j < dim; ++j) {
      const double d = f[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)];
      sd[static_cast<size_t>(j)] += d * d;
    }
  for (auto& v : sd) v = std::sqrt(v / static_cast<double>(set.n - 1));
}

}  // namespace

double faed(const FieldBatch& a, const FieldBatch& b, const Vae& feature_encoder) {
  check_paired(a, b, false);
  std::vector<double> ma, sa, mb, sb;
  latent_moments(a, feature_encoder, ma, sa);
  latent_moments(b, feature_encoder, mb, sb);
  double d = 0.0;
  for (size_t j = 0; j < ma.size(); ++j) {
    const double dm = ma[j] - mb[j];
    const double ds = sa[j] - sb[j];
    d += dm * dm + ds * ds;
  }
  return d;
}

PowerSpectrum radial_psd(const FieldBatch& batch, int channel, int crop_y,
                         int crop_x, int crop_size) {
  if (channel < 0 || channel >= batch.k) throw std::runtime_error("radial_psd: bad channel");
  const int s = crop_size;
  if (s < 2) throw std::runtime_error("radial_psd: crop too small");
  if (crop_y < 0 || crop_x < 0 || crop_y + s > batch.h || crop_x + s > batch.w)
    throw std::runtime_error("radial_psd: crop outside grid");
  for (int py = crop_y; py < crop_y + s; ++py)
    for (int px = crop_x; px < crop_x + s; ++px)
      if (!batch.valid(py, px))
        throw std::runtime_error("radial_psd: crop intersects land");

  const int kmax = s / 2;
  PowerSpectrum ps;
  ps.wavenumber.resize(static_cast<size_t>(kmax));
  ps.density.assign(static_cast<size_t>(kmax), 0.0);
  ps.count.assign(static_cast<size_t>(kmax), 0);
  for (int b = 0; b < kmax; ++b) ps.wavenumber[static_cast<size_t>(b)] = b + 1;

  // Mode-to-bin assignment is sample independent; count modes once.
  std::vector<int> bin_of(static_cast<size_t>(s) * s, -1);
  for (int ky = 0; ky < s; ++ky)
    for (int kx = 0; kx < s; ++kx) {
      const int fy = ky <= s / 2 ? ky : ky - s;
      const int fx = kx <= s / 2 ? kx : kx - s;
      const double kr = std::sqrt(static_cast<double>(fy) * fy + static_cast<double>(fx) * fx);
      int b = static_cast<int>(std::lround(kr));
      if (ky == 0 && kx == 0) continue;  // DC removed with the crop mean
      if (b < 1) b = 1;
      if (b > kmax) b = kmax;  // corner modes fold into the outermost bin
      bin_of[static_cast<size_t>(ky) * s + kx] = b - 1;
      ++ps.count[static_cast<size_t>(b - 1)];
    }

  const double l2 = static_cast<double>(s) * s * static_cast<double>(s) * s;
  std::vector<double> crop(static_cast<size_t>(s) * s);
  std::vector<std::complex<double>> spec;
  for (int n = 0; n < batch.n; ++n) {
    double mean = 0.0;
    for (int py = 0; py < s; ++py)
      for (int px = 0; px < s; ++px) {
        crop[static_cast<size_t>(py) * s + px] =
            batch.at(n, channel, crop_y + py, crop_x + px);
        mean += crop[static_cast<size_t>(py) * s + px];
      }
    mean /= static_cast<double>(s) * s;
    for (auto& v : crop) v -= mean;
    detail::dft2d_real(crop, s, s, spec);
    for (size_t i = 0; i < spec.size(); ++i) {
      if (bin_of[i] < 0) continue;
      ps.density[static_cast<size_t>(bin_of[i])] += std::norm(spec[i]) / l2;
    }
  }
  for (int b = 0; b < kmax; ++b)
    if (ps.count[static_cast<size_t>(b)] > 0)
      ps.density[static_cast<size_t>(b)] /=
          static_cast<double>(batch.n) * static_cast<double>(ps.count[static_cast<size_t>(b)]);
  return ps;
}

SieCurve sie_probability_curve(const FieldBatch& test, const FieldBatch& gen,
                               double threshold, double bin_width) {
  check_paired(test, gen, false);
  if (!(bin_width > 0.0 && bin_width <= 1.0))
    throw std::runtime_error("sie_probability_curve: bad bin width");
  const auto pt = coverage_probability(test, threshold);
  const auto pg = coverage_probability(gen, threshold);
  const int nbins = static_cast<int>(std::lround(1.0 / bin_width));
  std::vector<double> sum_t(static_cast<size_t>(nbins), 0.0);
  std::vector<double> sum_g(static_cast<size_t>(nbins), 0.0);
  std::vector<int64_t> cnt(static_cast<size_t>(nbins), 0);
  for (int py = 0; py < test.h; ++py)
    for (int px = 0; px < test.w; ++px) {
      if (!test.valid(py, px)) continue;
      const size_t i = static_cast<size_t>(py) * test.w + px;
      int b = static_cast<int>(pt[i] / bin_width);
      if (b >= nbins) b = nbins - 1;
      sum_t[static_cast<size_t>(b)] += pt[i];
      sum_g[static_cast<size_t>(b)] += pg[i];
      ++cnt[static_cast<size_t>(b)];
    }
  SieCurve curve;
  for (int b = 0; b < nbins; ++b) {
    if (cnt[static_cast<size_t>(b)] == 0) continue;  // empty bins omitted
    curve.bin_lo.push_back(b * bin_width);
    curve.bin_hi.push_back((b + 1) * bin_width);
    curve.mean_test_p.push_back(sum_t[static_cast<size_t>(b)] / cnt[static_cast<size_t>(b)]);
    curve.mean_gen_p.push_back(sum_g[static_cast<size_t>(b)] / cnt[static_cast<size_t>(b)]);
    curve.count.push_back(cnt[static_cast<size_t>(b)]);
  }
  return curve;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("csv: cannot open for write: " + path);
  os << std::setprecision(17);
  return os;
}

}  // namespace

void write_metrics_csv(const MetricReport& report,
                       const std::vector<std::string>& channel_names,
                       const std::string& path) {
  auto os = open_csv(path);
  os << "metric,scope,value\n";
  const auto row = [&](const std::string& m, const std::string& s, double v) {
    if (!std::isnan(v)) os << m << "," << s << "," << v << "\n";
  };
  row("rmse", "all", report.rmse);
  for (size_t c = 0; c < report.rmse_per_channel.size(); ++c)
    row("rmse", channel_names[c], report.rmse_per_channel[c]);
  row("ssim", "all", report.ssim);
  for (size_t c = 0; c < report.ssim_per_channel.size(); ++c)
    row("ssim", channel_names[c], report.ssim_per_channel[c]);
  row("acc_sie", "all", report.acc_sie);
  row("faed", "all", report.faed);
  row("rmse_sie", "all", report.rmse_sie);
  if (!report.faed_encoder_fp.empty())
    os << "faed_encoder_fp,all," << report.faed_encoder_fp << "\n";
}

void write_spectrum_csv(const PowerSpectrum& ps, const std::string& path) {
  auto os = open_csv(path);
  os << "wavenumber,density,count\n";
  for (size_t i = 0; i < ps.wavenumber.size(); ++i)
    os << ps.wavenumber[i] << "," << ps.density[i] << "," << ps.count[i] << "\n";
}

void write_curve_csv(const SieCurve& curve, const std::string& path) {
  auto os = open_csv(path);
  os << "bin_lo,bin_hi,mean_test_p,mean_gen_p,count\n";
  for (size_t i = 0; i < curve.bin_lo.size(); ++i)
    os << curve.bin_lo[i] << "," << curve.bin_hi[i] << "," << curve.mean_test_p[i]
       << "," << curve.mean_gen_p[i] << "," << curve.count[i] << "\n";
}

}  // namespace fieldgen
