#include "fieldgen/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fieldgen/rng.hpp"

namespace fieldgen {

void AdamState::init(const ParamList& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.tensor.size(), 0.0);
    v.emplace_back(p.tensor.size(), 0.0);
  }
}

void adam_step(ParamList& params, AdamState& state, double lr) {
  if (state.m.size() != params.size()) state.init(params);
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& t = params[pi].tensor;
    auto& val = t.values();
    auto& g = t.grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (size_t i = 0; i < val.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw std::runtime_error("adam_step: non-finite gradient in parameter '" +
                                 params[pi].name + "'");
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double lr_at(int64_t iteration, int64_t warmup_iters, int64_t total_iters,
             double lr_min, double lr_max) {
  if (warmup_iters > total_iters)
    throw std::runtime_error("lr_at: warmup_iters > total_iters");
  if (iteration < 0 || iteration > total_iters)
    throw std::runtime_error("lr_at: iteration out of range");
  if (iteration <= warmup_iters) {
    if (warmup_iters == 0) return lr_max;
    const double f = static_cast<double>(iteration) / static_cast<double>(warmup_iters);
    return lr_min + (lr_max - lr_min) * f;
  }
  const double f = static_cast<double>(iteration - warmup_iters) /
                   static_cast<double>(total_iters - warmup_iters);
  return lr_min + (lr_max - lr_min) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * f));
}

GradCheckReport grad_check(const std::function<ad::Tensor()>& loss_fn,
                           ParamList& params, double step,
                           int64_t max_coords_per_param, uint64_t seed) {
  // Analytic gradients first.
  for (auto& p : params) p.tensor.zero_grad();
  ad::Tensor loss = loss_fn();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) analytic.push_back(p.tensor.grad());

  GradCheckReport report;
  Rng rng(seed ^ 0x5ca1ab1edeadbeefull);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& val = params[pi].tensor.values();
    const int64_t n = static_cast<int64_t>(val.size());

    std::vector<int64_t> coords;
    if (max_coords_per_param <= 0 || n <= max_coords_per_param) {
      coords.resize(n);
      for (int64_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (int64_t i = 0; i < max_coords_per_param; ++i)
        coords.push_back(static_cast<int64_t>(rng.below(static_cast<uint64_t>(n))));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }

    // Scale reference so zero-gradient coordinates do not blow up the ratio.
    double scale = 1e-12;
    for (double g : analytic[pi]) scale = std::max(scale, std::abs(g));

    for (int64_t i : coords) {
      const double saved = val[i];
      val[i] = saved + step;
      const double fp = loss_fn().item();
      val[i] = saved - step;
      const double fm = loss_fn().item();
      val[i] = saved;
      const double fd = (fp - fm) / (2.0 * step);
      const double adg = analytic[pi][i];
      const double denom = std::max({std::abs(adg), std::abs(fd), scale, 1e-12});
      const double rel = std::abs(adg - fd) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace fieldgen
