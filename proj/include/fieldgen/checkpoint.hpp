#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fieldgen/tensor.hpp"

namespace fieldgen {

// Checkpoint layout, little-endian:
//   magic "FGCK" | version u32=1 | fingerprint u64 | count u32
//   per entry: name_len u32 | name bytes | ndim u32 | dims i64[ndim] | f64 data
struct Checkpoint {
  uint64_t fingerprint = 0;
  std::vector<std::pair<std::string, ad::Tensor>> entries;

  void add(const std::string& name, const ad::Tensor& t);
  void add_scalar(const std::string& name, double v);
  const ad::Tensor* find(const std::string& name) const;
  double scalar(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a over a byte string; used for config fingerprints. Masked to 48 bits
// so the value survives a round trip through an f64 payload.
uint64_t fingerprint64(const std::string& text);

}  // namespace fieldgen
