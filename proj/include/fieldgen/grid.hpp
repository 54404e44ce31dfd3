#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fieldgen/numeric.hpp"

namespace fieldgen {

// Per-channel physical bounds (possibly infinite) and training-set
// normalization statistics, all in data units.
struct ChannelSpec {
  std::string name;
  double lower = -kInf;
  double upper = kInf;
  double mean = 0.0;
  double std = 1.0;
  double range = 1.0;  // max - min over the training split
};

// N multichannel gridded samples over a shared land mask. Canonical form:
// values at mask==0 are exactly zero.
struct FieldBatch {
  int n = 0, k = 0, h = 0, w = 0;
  std::vector<double> data;     // [n][k][h][w]
  std::vector<uint8_t> mask;    // [h][w], 1 = valid (ocean)
  std::vector<ChannelSpec> channels;

  static FieldBatch empty(int n, int k, int h, int w);

  double& at(int s, int c, int y, int x) {
    return data[((static_cast<size_t>(s) * k + c) * h + y) * w + x];
  }
  double at(int s, int c, int y, int x) const {
    return data[((static_cast<size_t>(s) * k + c) * h + y) * w + x];
  }
  bool valid(int y, int x) const { return mask[static_cast<size_t>(y) * w + x] != 0; }
  int64_t valid_count() const;
  int64_t sample_size() const { return static_cast<int64_t>(k) * h * w; }

  // Slice of samples [start, start+count) sharing mask and specs.
  FieldBatch subset(int start, int count) const;
  // Force values at mask==0 to exactly zero.
  void canonicalize();
};

struct DatasetSplits {
  FieldBatch train, valid, test;
};

// Mean/std/range per channel over valid points of the training batch only.
// Throws if the mask has no valid point or a channel has zero variance.
std::vector<ChannelSpec> fit_normalization(const FieldBatch& train);

// (x - mean) / std on valid points; land stays exactly zero. The returned
// batch carries specs transformed into normalized units (bounds scaled,
// mean 0, std 1). denormalize inverts with the same fitted specs.
FieldBatch normalize(const FieldBatch& batch, const std::vector<ChannelSpec>& specs);
FieldBatch denormalize(const FieldBatch& batch, const std::vector<ChannelSpec>& specs);

// ---- synthetic bounded fields ----

struct SyntheticConfig {
  int n = 16;
  int h = 32;
  int w = 32;
  uint64_t seed = 0;
  double spectral_exponent = -3.0;  // power-law slope of the field PSD
};

// Land mask as the union of 1-3 random disks covering 5-20% of the grid.
std::vector<uint8_t> make_land_mask(int h, int w, uint64_t seed);

// Five channels over a shared land mask: a nonnegative "thickness" field
// (lower bound attained), two fields clipped to [0,1] (both bounds attained),
// and two unbounded smooth fields. Deterministic in the seed.
FieldBatch generate_synthetic(const SyntheticConfig& cfg,
                              const std::vector<uint8_t>* mask_override = nullptr);
FieldBatch generate_synthetic(int n, int h, int w, uint64_t seed);

// ---- FGRD binary format ----
// magic "FGRD" | version u32=1 | N,K,H,W u32 | per channel: flags u8 (bit0
// lower finite, bit1 upper finite), lower f32, upper f32, mean f32, std f32,
// range f32 | mask u8[H*W] | data f32[N*K*H*W]; little-endian throughout.
void save_fgrd(const FieldBatch& batch, const std::string& path);
FieldBatch load_fgrd(const std::string& path);

// Stable identifier of the dataset geometry: dims, channel specs, mask bytes.
uint64_t dataset_fingerprint(const FieldBatch& batch);

}  // namespace fieldgen
