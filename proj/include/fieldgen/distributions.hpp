#pragma once

#include <vector>

#include "fieldgen/grid.hpp"
#include "fieldgen/tensor.hpp"

namespace fieldgen {

// Deterministic clipping of a latent prediction into physical bounds:
//   y <= lower -> lower, y >= upper -> upper, else y. Idempotent.
double clip_value(double y, double lower, double upper);

// Clips every channel of a batch to its ChannelSpec bounds (valid points).
FieldBatch clip_to_bounds(const FieldBatch& batch);

// Per-channel bounds in the units the loss operates in (normalized space).
struct ChannelBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static ChannelBounds from_specs(const std::vector<ChannelSpec>& specs);
  static ChannelBounds unbounded(int k);
};

// Occupancy of the censored branches for one evaluation, over valid points.
struct CensoredBranchStats {
  int64_t at_lower = 0;
  int64_t at_upper = 0;
  int64_t interior = 0;
};

// Gaussian negative log-likelihood, summed over channels and valid grid
// points (no batch division):
//   1/2 [ (x-mu)^2/s^2 + log s^2 + log 2 pi ]  per element.
// x: constant [N,K,H,W]; mu: [N,K,H,W]; log_s: [K]; mask: [1,1,H,W].
ad::Tensor gaussian_nll(const ad::Tensor& x, const ad::Tensor& mu,
                        const ad::Tensor& log_s, const ad::Tensor& mask);

// Censored (type-I Tobit) negative log-likelihood. Observations exactly on a
// bound contribute -log Phi of the standardized margin; interior points
// contribute the Gaussian term. Bound membership is exact equality, which the
// data pipeline guarantees for clipped fields. Differentiable in mu and log_s
// on every branch. Throws if a valid observation lies outside its bounds.
ad::Tensor censored_nll(const ad::Tensor& x, const ad::Tensor& mu,
                        const ad::Tensor& log_s, const ChannelBounds& bounds,
                        const ad::Tensor& mask,
                        CensoredBranchStats* stats = nullptr);

// Censored Gaussian density/probability at a point: point masses Phi at the
// bounds, phi/s in the interior, zero outside.
double censored_pdf(double x, double mu, double s, double lower, double upper);

}  // namespace fieldgen
