#include "fieldgen/distributions.hpp"

#include <cmath>
#include <stdexcept>

#include "fieldgen/numeric.hpp"

namespace fieldgen {

using ad::Tensor;

double clip_value(double y, double lower, double upper) {
  if (y <= lower) return lower;
  if (y >= upper) return upper;
  return y;
}

FieldBatch clip_to_bounds(const FieldBatch& batch) {
  FieldBatch out = batch;
  for (int c = 0; c < batch.k; ++c) {
    const double lo = batch.channels[c].lower;
    const double hi = batch.channels[c].upper;
    if (lo >= hi) throw std::runtime_error("clip_to_bounds: bounds out of order");
    for (int s = 0; s < batch.n; ++s)
      for (int y = 0; y < batch.h; ++y)
        for (int x = 0; x < batch.w; ++x)
          if (batch.valid(y, x))
            out.at(s, c, y, x) = clip_value(batch.at(s, c, y, x), lo, hi);
  }
  return out;
}

ChannelBounds ChannelBounds::from_specs(const std::vector<ChannelSpec>& specs) {
  ChannelBounds b;
  for (const auto& s : specs) {
    b.lower.push_back(s.lower);
    b.upper.push_back(s.upper);
  }
  return b;
}

ChannelBounds ChannelBounds::unbounded(int k) {
  ChannelBounds b;
  b.lower.assign(static_cast<size_t>(k), -kInf);
  b.upper.assign(static_cast<size_t>(k), kInf);
  return b;
}

namespace {

struct NllDims {
  int64_t n, k, h, w;
};

NllDims nll_dims(const Tensor& x, const Tensor& mu, const Tensor& log_s,
                 const Tensor& mask) {
  const auto& xs = x.shape();
  if (xs.size() != 4) throw std::runtime_error("nll: x must be [N,K,H,W]");
  if (mu.shape() != xs) throw std::runtime_error("nll: mu/x shape mismatch");
  if (log_s.shape() != ad::Shape{xs[1]})
    throw std::runtime_error("nll: log_s must be [K]");
  if (mask.shape() != ad::Shape{1, 1, xs[2], xs[3]})
    throw std::runtime_error("nll: mask must be [1,1,H,W]");
  return {xs[0], xs[1], xs[2], xs[3]};
}

Tensor broadcast_channel(const Tensor& per_channel, const NllDims& d) {
  return ad::broadcast_to(ad::reshape(per_channel, {1, d.k, 1, 1}),
                          {d.n, d.k, d.h, d.w});
}

}  // namespace

ad::Tensor gaussian_nll(const Tensor& x, const Tensor& mu, const Tensor& log_s,
                        const Tensor& mask) {
  const NllDims d = nll_dims(x, mu, log_s, mask);
  const Tensor s_inv = broadcast_channel(ad::exp(ad::neg(log_s)), d);
  const Tensor log_s_b = broadcast_channel(log_s, d);
  const Tensor m = ad::broadcast_to(mask, {d.n, d.k, d.h, d.w});

  const Tensor u = ad::mul(ad::sub(x, mu), s_inv);
  const Tensor per_elem =
      ad::add(ad::affine(ad::mul(u, u), 0.5, kHalfLog2Pi), log_s_b);
  return ad::sum_all(ad::mul(m, per_elem));
}

ad::Tensor censored_nll(const Tensor& x, const Tensor& mu, const Tensor& log_s,
                        const ChannelBounds& bounds, const Tensor& mask,
                        CensoredBranchStats* stats) {
  const NllDims d = nll_dims(x, mu, log_s, mask);
  if (static_cast<int64_t>(bounds.lower.size()) != d.k ||
      static_cast<int64_t>(bounds.upper.size()) != d.k)
    throw std::runtime_error("censored_nll: bounds channel count mismatch");

  const int64_t total = d.n * d.k * d.h * d.w;
  const int64_t plane = d.h * d.w;
  const auto& xv = x.values();
  const auto& mv = mask.values();

  // Branch indicators and finite bound surrogates; infinite bounds never
  // match, their sentinel value 0 is inert under the zero indicator.
  std::vector<double> ind_lo(total, 0.0), ind_up(total, 0.0), ind_in(total, 0.0);
  std::vector<double> lo_vals(total, 0.0), up_vals(total, 0.0);
  CensoredBranchStats st;
  for (int64_t i = 0; i < total; ++i) {
    if (mv[static_cast<size_t>(i % plane)] == 0.0) continue;
    const int64_t c = (i / plane) % d.k;
    const double lo = bounds.lower[static_cast<size_t>(c)];
    const double up = bounds.upper[static_cast<size_t>(c)];
    const double v = xv[static_cast<size_t>(i)];
    lo_vals[static_cast<size_t>(i)] = std::isfinite(lo) ? lo : 0.0;
    up_vals[static_cast<size_t>(i)] = std::isfinite(up) ? up : 0.0;
    if (v < lo || v > up)
      throw std::runtime_error(
          "censored_nll: observation outside declared bounds in channel " +
          std::to_string(c));
    if (std::isfinite(lo) && v == lo) {
      ind_lo[static_cast<size_t>(i)] = 1.0;
      ++st.at_lower;
    } else if (std::isfinite(up) && v == up) {
      ind_up[static_cast<size_t>(i)] = 1.0;
      ++st.at_upper;
    } else {
      ind_in[static_cast<size_t>(i)] = 1.0;
      ++st.interior;
    }
  }
  if (stats) *stats = st;

  const ad::Shape shape = x.shape();
  const Tensor mask_lo = Tensor::from_values(shape, std::move(ind_lo));
  const Tensor mask_up = Tensor::from_values(shape, std::move(ind_up));
  const Tensor mask_in = Tensor::from_values(shape, std::move(ind_in));
  const Tensor x_lo = Tensor::from_values(shape, std::move(lo_vals));
  const Tensor x_up = Tensor::from_values(shape, std::move(up_vals));

  const Tensor s_inv = broadcast_channel(ad::exp(ad::neg(log_s)), d);
  const Tensor log_s_b = broadcast_channel(log_s, d);

  // At a lower bound: -log Phi((x_L - mu)/s); upper: -log Phi((mu - x_U)/s).
  const Tensor term_lo =
      ad::neg(ad::log_std_normal_cdf(ad::mul(ad::sub(x_lo, mu), s_inv)));
  const Tensor term_up =
      ad::neg(ad::log_std_normal_cdf(ad::mul(ad::sub(mu, x_up), s_inv)));
  const Tensor u = ad::mul(ad::sub(x, mu), s_inv);
  const Tensor term_in =
      ad::add(ad::affine(ad::mul(u, u), 0.5, kHalfLog2Pi), log_s_b);

  const Tensor parts = ad::add(ad::add(ad::mul(mask_lo, term_lo), ad::mul(mask_up, term_up)),
                               ad::mul(mask_in, term_in));
  return ad::sum_all(parts);
}

double censored_pdf(double x, double mu, double s, double lower, double upper) {
  if (lower >= upper) throw std::runtime_error("censored_pdf: bounds out of order");
  if (!(s > 0.0)) throw std::runtime_error("censored_pdf: scale must be positive");
  if (x < lower || x > upper) return 0.0;
  if (std::isfinite(lower) && x == lower) return std_normal_cdf((lower - mu) / s);
  if (std::isfinite(upper) && x == upper) return std_normal_cdf((mu - upper) / s);
  const double u = (x - mu) / s;
  return std::exp(log_normal_pdf(u)) / s;
}

}  // namespace fieldgen
