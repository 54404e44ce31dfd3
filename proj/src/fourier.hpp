#pragma once

#include <complex>
#include <vector>

namespace fieldgen::detail {

// Plain row-column DFT, O(H*W*(H+W)). Grids in this project are small
// (desk-scale crops), so no FFT machinery is needed.
//   forward: F[ky*W+kx] = sum f[y*W+x] * exp(-2*pi*i*(ky*y/H + kx*x/W))
//   inverse: scales by 1/(H*W)
void dft2d(const std::vector<std::complex<double>>& in, int h, int w,
           std::vector<std::complex<double>>& out, bool inverse);

inline void dft2d_real(const std::vector<double>& in, int h, int w,
                       std::vector<std::complex<double>>& out) {
  std::vector<std::complex<double>> c(in.begin(), in.end());
  dft2d(c, h, w, out, false);
}

}  // namespace fieldgen::detail
