#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fieldgen/tensor.hpp"

namespace fieldgen {

struct NamedParam {
  std::string name;
  ad::Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

// Adam moments, one pair of accumulators per parameter, matched by position.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const ParamList& params);
};

// Bias-corrected Adam update without weight decay. Throws on non-finite
// gradients, naming the offending parameter.
void adam_step(ParamList& params, AdamState& state, double lr);

// Linear warmup lr_min -> lr_max over warmup_iters, then cosine decay back to
// lr_min at total_iters.
double lr_at(int64_t iteration, int64_t warmup_iters, int64_t total_iters,
             double lr_min, double lr_max);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t checked = 0;
};

// Compares reverse-mode gradients against central finite differences. The
// loss function must rebuild its graph on every call (parameters are
// perturbed in place between calls). `max_coords_per_param` bounds the number
// of probed coordinates per tensor (0 = all), chosen deterministically from
// `seed`. Relative error is measured against the gradient's own scale:
// |ad - fd| / max(|ad|, |fd|, ||fd||_inf, 1e-12).
GradCheckReport grad_check(const std::function<ad::Tensor()>& loss_fn,
                           ParamList& params, double step,
                           int64_t max_coords_per_param = 0,
                           uint64_t seed = 0);

}  // namespace fieldgen
