#include "fourier.hpp"

#include <cmath>

namespace fieldgen::detail {

namespace {

// One-dimensional DFT along contiguous rows of length n, `count` rows.
void dft_rows(std::vector<std::complex<double>>& data, int count, int n,
              bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> twiddle(static_cast<size_t>(n) * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const double a = sign * 2.0 * 3.14159265358979323846 * k * j / n;
      twiddle[static_cast<size_t>(k) * n + j] = {std::cos(a), std::sin(a)};
    }
  std::vector<std::complex<double>> row(n);
  for (int r = 0; r < count; ++r) {
    auto* d = data.data() + static_cast<size_t>(r) * n;
    for (int k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      const auto* tw = twiddle.data() + static_cast<size_t>(k) * n;
      for (int j = 0; j < n; ++j) acc += d[j] * tw[j];
      row[k] = acc;
    }
    std::copy(row.begin(), row.end(), d);
  }
}

}  // namespace

void dft2d(const std::vector<std::complex<double>>& in, int h, int w,
           std::vector<std::complex<double>>& out, bool inverse) {
  out = in;
  dft_rows(out, h, w, inverse);
  // Transpose, transform columns as rows, transpose back.
  std::vector<std::complex<double>> t(out.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t[static_cast<size_t>(x) * h + y] = out[static_cast<size_t>(y) * w + x];
  dft_rows(t, w, h, inverse);
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) out[static_cast<size_t>(y) * w + x] = t[static_cast<size_t>(x) * h + y];
  if (inverse) {
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (auto& v : out) v *= scale;
  }
}

}  // namespace fieldgen::detail
