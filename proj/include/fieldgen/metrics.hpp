#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fieldgen/grid.hpp"
#include "fieldgen/models.hpp"

namespace fieldgen {

// Extent threshold on the thickness-like channel, in data units.
inline constexpr double kExtentThreshold = 0.01;

// Metrics not computed for a given mode stay NaN and are omitted from CSV.
struct MetricReport {
  double rmse = kNan;
  double ssim = kNan;
  double acc_sie = kNan;
  double faed = kNan;
  double rmse_sie = kNan;
  std::vector<double> rmse_per_channel;
  std::vector<double> ssim_per_channel;
  std::string faed_encoder_fp;  // hex fingerprint of the feature encoder

  static constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
};

struct PowerSpectrum {
  std::vector<double> wavenumber;  // integer annulus centers, 1..floor(s/2)
  std::vector<double> density;     // mean |F|^2 / L^2 per annulus, over samples
  std::vector<int64_t> count;      // modes per annulus
};

struct SieCurve {
  std::vector<double> bin_lo, bin_hi;
  std::vector<double> mean_test_p, mean_gen_p;
  std::vector<int64_t> count;
};

// sqrt of the mean over samples/channels/valid points of (x-y)^2 / sigma_k^2,
// with sigma_k the fitted training std carried by x's channel specs.
double normalized_rmse(const FieldBatch& x, const FieldBatch& y,
                       std::vector<double>* per_channel = nullptr);

// Mean structural similarity with 7x7 uniform windows. Window moments are
// taken over the mask-weighted intersection of the window with the valid
// region; windows with fewer than 4 valid points are skipped. Stabilizers
// c1 = (0.01 r_k)^2, c2 = (0.03 r_k)^2 from the channel's dynamic range.
double ssim(const FieldBatch& x, const FieldBatch& y,
            std::vector<double>* per_channel = nullptr);

// Fraction of valid points whose binarized extents (channel 0 >= threshold)
// agree, averaged over samples.
double acc_sie(const FieldBatch& x, const FieldBatch& y,
               double threshold = kExtentThreshold);

// RMSE between per-point coverage frequencies of the two sets.
double rmse_sie(const FieldBatch& a, const FieldBatch& b,
                double threshold = kExtentThreshold);

// Frechet distance in the latent space of an independently trained beta=1
// VAE, simplified under the isotropic assumption to
// ||mu_a - mu_b||^2 + ||sd_a - sd_b||^2 over point-wise latent statistics
// (sample std, N-1). Both sets need at least 2 elements.
double faed(const FieldBatch& a, const FieldBatch& b, const Vae& feature_encoder);

// Radially averaged power spectral density of a square crop that must lie
// fully inside the valid region: per sample, subtract the crop mean, DFT,
// |.|^2, bin by integer wavenumber annulus, average over samples. Modes
// beyond the Nyquist ring fold into the outermost bin so the binned total
// power equals the mean crop variance.
PowerSpectrum radial_psd(const FieldBatch& batch, int channel, int crop_y,
                         int crop_x, int crop_size);

// Mean generated coverage probability per 5% bin of test coverage
// probability; empty bins are omitted.
SieCurve sie_probability_curve(const FieldBatch& test, const FieldBatch& gen,
                               double threshold = kExtentThreshold,
                               double bin_width = 0.05);

// CSV emission. Columns:
//   metrics:  metric,scope,value   (scope "all" or a channel name)
//   spectrum: wavenumber,density,count
//   curve:    bin_lo,bin_hi,mean_test_p,mean_gen_p,count
void write_metrics_csv(const MetricReport& report,
                       const std::vector<std::string>& channel_names,
                       const std::string& path);
void write_spectrum_csv(const PowerSpectrum& ps, const std::string& path);
void write_curve_csv(const SieCurve& curve, const std::string& path);

}  // namespace fieldgen
