#include "fieldgen/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fieldgen {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

void put_f64(std::ostream& os, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& is) {
  const uint64_t lo = get_u32(is);
  const uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

double get_f64(std::istream& is) {
  const uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void Checkpoint::add(const std::string& name, const ad::Tensor& t) {
  entries.emplace_back(name, t);
}

void Checkpoint::add_scalar(const std::string& name, double v) {
  entries.emplace_back(name, ad::Tensor::scalar(v));
}

const ad::Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries)
    if (n == name) return &t;
  return nullptr;
}

double Checkpoint::scalar(const std::string& name) const {
  const ad::Tensor* t = find(name);
  if (!t || t->size() != 1)
    throw std::runtime_error("checkpoint: missing scalar entry '" + name + "'");
  return t->values()[0];
}

bool Checkpoint::has(const std::string& name) const { return find(name) != nullptr; }

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write("FGCK", 4);
  put_u32(os, 1);
  put_u64(os, ck.fingerprint);
  put_u32(os, static_cast<uint32_t>(ck.entries.size()));
  for (const auto& [name, t] : ck.entries) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) put_u64(os, static_cast<uint64_t>(d));
    for (double v : t.values()) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FGCK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(is);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint ck;
  ck.fingerprint = get_u64(is);
  const uint32_t count = get_u32(is);
  for (uint32_t e = 0; e < count; ++e) {
    const uint32_t name_len = get_u32(is);
    if (name_len > 4096) throw std::runtime_error("checkpoint: name too long");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t ndim = get_u32(is);
    if (ndim > 8) throw std::runtime_error("checkpoint: too many dims");
    ad::Shape shape(ndim);
    int64_t total = 1;
    for (auto& d : shape) {
      d = static_cast<int64_t>(get_u64(is));
      if (d < 0 || d > (int64_t(1) << 32)) throw std::runtime_error("checkpoint: bad dim");
      total *= d;
    }
    if (total > (int64_t(1) << 32)) throw std::runtime_error("checkpoint: tensor too large");
    std::vector<double> vals(static_cast<size_t>(total));
    for (auto& v : vals) v = get_f64(is);
    ck.entries.emplace_back(name, ad::Tensor::from_values(shape, std::move(vals)));
  }
  return ck;
}

uint64_t fingerprint64(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h & ((uint64_t(1) << 48) - 1);
}

}  // namespace fieldgen
