#include "fieldgen/grid.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fieldgen/rng.hpp"
#include "oracles.hpp"
#include "test_utils.hpp"

using namespace fieldgen;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(static_cast<bool>(is), "cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

FieldBatch tiny_batch(int n, int k, int h, int w) {
  FieldBatch b = FieldBatch::empty(n, k, h, w);
  for (int c = 0; c < k; ++c) b.channels[c].name = "ch" + std::to_string(c);
  return b;
}

}  // namespace

static void test_fit_normalization() {
  // {0,2} equally frequent -> mean 1, std 1, range 2.
  FieldBatch b = tiny_batch(1, 1, 2, 2);
  b.at(0, 0, 0, 0) = 0.0;
  b.at(0, 0, 0, 1) = 2.0;
  b.at(0, 0, 1, 0) = 0.0;
  b.at(0, 0, 1, 1) = 2.0;
  auto specs = fit_normalization(b);
  require_close(specs[0].mean, 1.0, 0.0, "mean of {0,2}");
  require_close(specs[0].std, 1.0, 0.0, "std of {0,2}");
  require_close(specs[0].range, 2.0, 0.0, "range of {0,2}");

  // Constant channel -> error.
  FieldBatch c = tiny_batch(2, 1, 2, 2);
  for (auto& v : c.data) v = 3.5;
  REQUIRE_THROWS(fit_normalization(c), "constant channel must throw");

  // All-land mask -> error.
  FieldBatch d = tiny_batch(1, 1, 2, 2);
  d.mask.assign(d.mask.size(), 0);
  REQUIRE_THROWS(fit_normalization(d), "all-land mask must throw");

  pass("fit_normalization basics");
}

static void test_fit_vs_two_pass_oracle() {
  FieldBatch b = generate_synthetic(3, 16, 16, 42);
  auto specs = fit_normalization(b);
  for (int c = 0; c < b.k; ++c) {
    std::vector<double> vals;
    for (int s = 0; s < b.n; ++s)
      for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x)
          if (b.valid(y, x)) vals.push_back(b.at(s, c, y, x));
    const auto ref = oracles::two_pass_stats(vals);
    require_close(specs[c].mean, ref.mean, 1e-12, "mean vs oracle");
    require_close(specs[c].std, ref.std, 1e-12, "std vs oracle");
    require_close(specs[c].range, ref.range, 1e-12, "range vs oracle");
  }
  pass("fit_normalization matches two-pass oracle (1e-12)");
}

static void test_stats_mask_invariance() {
  FieldBatch b = generate_synthetic(4, 16, 16, 7);
  auto specs = fit_normalization(b);
  FieldBatch perturbed = b;
  Rng rng(9);
  for (int s = 0; s < b.n; ++s)
    for (int c = 0; c < b.k; ++c)
      for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x)
          if (!b.valid(y, x)) perturbed.at(s, c, y, x) = rng.uniform(-9.0, 9.0);
  auto specs2 = fit_normalization(perturbed);
  for (int c = 0; c < b.k; ++c) {
    REQUIRE(specs[c].mean == specs2[c].mean, "mean changed by land values");
    REQUIRE(specs[c].std == specs2[c].std, "std changed by land values");
    REQUIRE(specs[c].range == specs2[c].range, "range changed by land values");
  }
  pass("normalization statistics invariant to land values");
}

static void test_normalize_roundtrip() {
  FieldBatch b = generate_synthetic(4, 16, 16, 3);
  auto specs = fit_normalization(b);
  FieldBatch n = normalize(b, specs);

  // x = mean -> 0, x = mean + std -> 1.
  FieldBatch probe = tiny_batch(1, b.k, b.h, b.w);
  probe.mask = b.mask;
  for (int c = 0; c < b.k; ++c)
    for (int y = 0; y < b.h; ++y)
      for (int x = 0; x < b.w; ++x)
        probe.at(0, c, y, x) = (y % 2 == 0) ? specs[c].mean : specs[c].mean + specs[c].std;
  FieldBatch pn = normalize(probe, specs);
  for (int c = 0; c < b.k; ++c)
    for (int y = 0; y < b.h; ++y)
      for (int x = 0; x < b.w; ++x) {
        if (!probe.valid(y, x)) continue;
        require_close(pn.at(0, c, y, x), (y % 2 == 0) ? 0.0 : 1.0, 1e-12,
                      "normalize of mean / mean+std");
      }

  // Round trip.
  FieldBatch back = denormalize(n, specs);
  double max_diff = 0.0;
  for (size_t i = 0; i < b.data.size(); ++i)
    max_diff = std::max(max_diff, std::abs(back.data[i] - b.data[i]));
  REQUIRE(max_diff < 1e-6, "normalize/denormalize roundtrip");

  // Masked points stay exactly zero; bounds transform with the data.
  for (int y = 0; y < b.h; ++y)
    for (int x = 0; x < b.w; ++x)
      if (!b.valid(y, x)) REQUIRE(n.at(0, 0, y, x) == 0.0, "land stays zero");
  require_close(n.channels[0].lower, (0.0 - specs[0].mean) / specs[0].std, 1e-12,
                "normalized lower bound");
  REQUIRE(std::isinf(n.channels[0].upper), "infinite bound stays infinite");

  // Channel-count mismatch.
  std::vector<ChannelSpec> wrong(specs.begin(), specs.end() - 1);
  REQUIRE_THROWS(normalize(b, wrong), "channel-count mismatch must throw");

  pass("normalize/denormalize");
}

static void test_generator() {
  FieldBatch a = generate_synthetic(8, 24, 24, 123);
  FieldBatch b = generate_synthetic(8, 24, 24, 123);
  REQUIRE(a.data == b.data && a.mask == b.mask, "same seed, identical output");
  FieldBatch c = generate_synthetic(8, 24, 24, 124);
  REQUIRE(a.data != c.data, "different seed, different fields");

  // Land coverage within 5-20%.
  const double land_frac =
      1.0 - static_cast<double>(a.valid_count()) / (a.h * a.w);
  REQUIRE(land_frac >= 0.05 && land_frac <= 0.20, "land coverage in [5%,20%]");

  // Channel 0 attains its zero lower bound with positive frequency; bounded
  // channels honor their bounds exactly.
  FieldBatch big = generate_synthetic(100, 16, 16, 5);
  int64_t zeros = 0, ones1 = 0, zeros1 = 0;
  for (int s = 0; s < big.n; ++s)
    for (int y = 0; y < big.h; ++y)
      for (int x = 0; x < big.w; ++x) {
        if (!big.valid(y, x)) continue;
        const double th = big.at(s, 0, y, x);
        const double co = big.at(s, 1, y, x);
        const double da = big.at(s, 4, y, x);
        REQUIRE(th >= 0.0, "thickness nonnegative");
        REQUIRE(co >= 0.0 && co <= 1.0, "concentration in [0,1]");
        REQUIRE(da >= 0.0 && da <= 1.0, "damage in [0,1]");
        zeros += (th == 0.0);
        zeros1 += (co == 0.0);
        ones1 += (co == 1.0);
      }
  REQUIRE(zeros > 0, "thickness hits exact zero");
  REQUIRE(zeros1 > 0 && ones1 > 0, "concentration hits both bounds");

  REQUIRE_THROWS(generate_synthetic(1, 8, 8, 0), "grid below 16 must throw");
  pass("synthetic generator");
}

static void test_fgrd_roundtrip() {
  const std::string p1 = "test_grid_a.fgrd";
  const std::string p2 = "test_grid_b.fgrd";
  FieldBatch b = generate_synthetic(5, 16, 16, 77);
  b.channels = fit_normalization(b);
  save_fgrd(b, p1);
  FieldBatch l = load_fgrd(p1);
  save_fgrd(l, p2);
  REQUIRE(slurp(p1) == slurp(p2), "fgrd roundtrip bit-identical");
  REQUIRE(l.n == b.n && l.k == b.k && l.h == b.h && l.w == b.w, "dims preserved");
  REQUIRE(l.mask == b.mask, "mask preserved");

  // Minimal 1x1x1x1 batch.
  FieldBatch tiny = tiny_batch(1, 1, 1, 1);
  tiny.at(0, 0, 0, 0) = 0.25;
  save_fgrd(tiny, p1);
  FieldBatch tl = load_fgrd(p1);
  REQUIRE(tl.at(0, 0, 0, 0) == 0.25, "1x1x1x1 roundtrip");

  // Wrong magic.
  {
    std::ofstream os(p1, std::ios::binary);
    os << "NOPE" << std::string(64, '\0');
  }
  REQUIRE_THROWS(load_fgrd(p1), "bad magic must throw");

  // Truncated file.
  save_fgrd(b, p1);
  std::string bytes = slurp(p1);
  {
    std::ofstream os(p2, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  REQUIRE_THROWS(load_fgrd(p2), "truncated file must throw");

  // Canonicalization: nonzero land values in the file come back as zeros.
  FieldBatch dirty = generate_synthetic(2, 16, 16, 11);
  bool has_land = false;
  for (int y = 0; y < dirty.h; ++y)
    for (int x = 0; x < dirty.w; ++x)
      if (!dirty.valid(y, x)) {
        dirty.at(0, 0, y, x) = 5.0;
        has_land = true;
      }
  REQUIRE(has_land, "test needs land points");
  save_fgrd(dirty, p1);
  FieldBatch cleaned = load_fgrd(p1);
  for (int y = 0; y < cleaned.h; ++y)
    for (int x = 0; x < cleaned.w; ++x)
      if (!cleaned.valid(y, x))
        REQUIRE(cleaned.at(0, 0, y, x) == 0.0, "land canonicalized to zero on load");

  std::remove(p1.c_str());
  std::remove(p2.c_str());
  pass("fgrd format");
}

int main() {
  test_fit_normalization();
  test_fit_vs_two_pass_oracle();
  test_stats_mask_invariance();
  test_normalize_roundtrip();
  test_generator();
  test_fgrd_roundtrip();
  std::cout << "test_grid: all sections passed\n";
  return 0;
}
