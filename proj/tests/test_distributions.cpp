#include "fieldgen/distributions.hpp"

#include "fieldgen/numeric.hpp"
#include "fieldgen/optim.hpp"
#include "fieldgen/rng.hpp"
#include "oracles.hpp"
#include "test_utils.hpp"

using namespace fieldgen;
using ad::Tensor;

namespace {

Tensor ones_mask(int h, int w) { return Tensor::full({1, 1, h, w}, 1.0); }

// Scalar-case helper: single-element batches [1,1,1,1].
double censored_scalar(double x, double mu, double log_s, double lo, double hi) {
  ChannelBounds b;
  b.lower = {lo};
  b.upper = {hi};
  Tensor xt = Tensor::from_values({1, 1, 1, 1}, {x});
  Tensor mt = Tensor::from_values({1, 1, 1, 1}, {mu});
  Tensor st = Tensor::from_values({1}, {log_s});
  return censored_nll(xt, mt, st, b, ones_mask(1, 1)).item();
}

}  // namespace

static void test_clip() {
  require_close(clip_value(-0.5, 0.0, 1.0), 0.0, 0.0, "clip below");
  require_close(clip_value(0.5, 0.0, 1.0), 0.5, 0.0, "clip interior");
  require_close(clip_value(1.2, 0.0, 1.0), 1.0, 0.0, "clip above");
  require_close(clip_value(clip_value(1.2, 0.0, 1.0), 0.0, 1.0), 1.0, 0.0,
                "clip idempotent");
  pass("clip_to_bounds");
}

static void test_gaussian_nll_values() {
  // Per-element values at unit scale.
  Tensor x = Tensor::from_values({1, 1, 1, 2}, {0.0, 1.0});
  Tensor mu = Tensor::from_values({1, 1, 1, 2}, {0.0, 0.0});
  Tensor log_s = Tensor::zeros({1});
  const double v = gaussian_nll(x, mu, log_s, ones_mask(1, 2)).item();
  require_close(v, 0.9189385332046727 + 1.4189385332046727, 1e-12,
                "gaussian nll, x=mu and |x-mu|=1");

  // x-mu = 2, s = 2 -> 0.5*(1 + ln 4 + ln 2pi).
  Tensor x2 = Tensor::from_values({1, 1, 1, 1}, {2.0});
  Tensor mu2 = Tensor::from_values({1, 1, 1, 1}, {0.0});
  Tensor ls2 = Tensor::from_values({1}, {std::log(2.0)});
  require_close(gaussian_nll(x2, mu2, ls2, ones_mask(1, 1)).item(),
                2.112085713764618, 1e-12, "gaussian nll, d=2 s=2");
  pass("gaussian_nll values");
}

static void test_censored_nll_values() {
  // On the lower bound with mu = x_L and s = 1: -ln Phi(0) = ln 2.
  require_close(censored_scalar(0.0, 0.0, 0.0, 0.0, kInf), 0.6931471805599453,
                1e-12, "censored at lower, symmetric");

  // On the upper bound 1 with mu = 0, s = 0.5: -ln Phi(-2).
  require_close(censored_scalar(1.0, 0.0, std::log(0.5), -kInf, 1.0),
                3.783184333682032, 1e-6, "censored at upper, -lnPhi(-2)");

  // Unbounded channels reduce to the Gaussian NLL exactly.
  Rng rng(5);
  Tensor x = Tensor::zeros({2, 3, 4, 4});
  Tensor mu = Tensor::zeros({2, 3, 4, 4});
  for (auto& v : x.values()) v = rng.normal();
  for (auto& v : mu.values()) v = rng.normal();
  Tensor log_s = Tensor::from_values({3}, {0.1, -0.2, 0.3});
  const Tensor mask = ones_mask(4, 4);
  const double g = gaussian_nll(x, mu, log_s, mask).item();
  const double c = censored_nll(x, mu, log_s, ChannelBounds::unbounded(3), mask).item();
  REQUIRE(g == c, "unbounded censored == gaussian exactly");

  // Branch continuity: finite bounds 50 std away match to 1e-9.
  ChannelBounds far;
  far.lower = {-50.0, -50.0, -50.0};
  far.upper = {50.0, 50.0, 50.0};
  const double cf = censored_nll(x, mu, log_s, far, mask).item();
  require_close(cf, g, 1e-9, "far bounds -> gaussian limit");

  // Observation outside bounds -> error.
  ChannelBounds tight;
  tight.lower = {0.0};
  tight.upper = {1.0};
  Tensor bad = Tensor::from_values({1, 1, 1, 1}, {-0.5});
  Tensor mu1 = Tensor::zeros({1, 1, 1, 1});
  Tensor ls1 = Tensor::zeros({1});
  REQUIRE_THROWS(censored_nll(bad, mu1, ls1, tight, ones_mask(1, 1)),
                 "out-of-bounds observation throws");
  pass("censored_nll values");
}

static void test_censored_masked_invariance() {
  Rng rng(6);
  Tensor mask = Tensor::zeros({1, 1, 2, 2});
  mask.values() = {1.0, 0.0, 1.0, 0.0};
  ChannelBounds b;
  b.lower = {0.0};
  b.upper = {1.0};
  std::vector<double> base = {0.5, 0.25, 1.0, 0.75};
  Tensor mu = Tensor::from_values({1, 1, 2, 2}, {0.2, 0.3, 0.4, 0.5});
  Tensor ls = Tensor::zeros({1});
  const double v1 =
      censored_nll(Tensor::from_values({1, 1, 2, 2}, base), mu, ls, b, mask).item();
  // Perturb the two masked positions, even outside the bounds.
  std::vector<double> pert = base;
  pert[1] = -7.0;
  pert[3] = 12.0;
  const double v2 =
      censored_nll(Tensor::from_values({1, 1, 2, 2}, pert), mu, ls, b, mask).item();
  REQUIRE(v1 == v2, "censored nll invariant to masked values");

  CensoredBranchStats st;
  censored_nll(Tensor::from_values({1, 1, 2, 2}, base), mu, ls, b, mask, &st);
  REQUIRE(st.at_upper == 1 && st.interior == 1 && st.at_lower == 0,
          "branch stats count valid points only");
  pass("censored_nll mask invariance");
}

static void test_censored_gradient_signs() {
  // At a lower-bound observation the gradient w.r.t. mu is strictly positive
  // (the loss pushes mu down); interior with x > mu it is strictly negative.
  ParamList p{{"mu", Tensor::from_values({1, 1, 1, 1}, {0.5}, true)}};
  ChannelBounds b;
  b.lower = {0.0};
  b.upper = {kInf};
  Tensor ls = Tensor::zeros({1});
  {
    Tensor x = Tensor::from_values({1, 1, 1, 1}, {0.0});
    p[0].tensor.zero_grad();
    censored_nll(x, p[0].tensor, ls, b, ones_mask(1, 1)).backward();
    REQUIRE(p[0].tensor.grad()[0] > 0.0, "lower-bound obs pushes mu down");
  }
  {
    Tensor x = Tensor::from_values({1, 1, 1, 1}, {1.5});
    p[0].tensor.zero_grad();
    censored_nll(x, p[0].tensor, ls, b, ones_mask(1, 1)).backward();
    REQUIRE(p[0].tensor.grad()[0] < 0.0, "interior obs above mu pulls mu up");
  }
  pass("censored gradient signs");
}

static void test_censored_grad_check_on_bound() {
  // FD check with observations exactly on the bounds; branches are data-fixed
  // so the loss stays smooth in (mu, log_s).
  Rng rng(7);
  ChannelBounds b;
  b.lower = {0.0, 0.0};
  b.upper = {1.0, kInf};
  std::vector<double> xv(2 * 2 * 3 * 3);
  for (auto& v : xv) {
    const double r = rng.uniform();
    v = r < 0.3 ? 0.0 : (r < 0.5 ? 1.0 : rng.uniform(0.05, 0.95));
  }
  // Channel 1 has no upper bound; remap its exact 1.0 draws inside.
  for (size_t i = 0; i < xv.size(); ++i) {
    const bool ch1 = (i / 9) % 2 == 1;
    if (ch1 && xv[i] == 1.0) xv[i] = 0.5;
  }
  Tensor x = Tensor::from_values({2, 2, 3, 3}, std::move(xv));
  ParamList p{{"mu", Tensor::zeros({2, 2, 3, 3}, true)},
              {"log_s", Tensor::zeros({2}, true)}};
  Rng rng2(8);
  for (auto& v : p[0].tensor.values()) v = rng2.uniform(-0.8, 0.8);
  auto loss = [&]() {
    return censored_nll(x, p[0].tensor, p[1].tensor, b, ones_mask(3, 3));
  };
  const auto rep = grad_check(loss, p, 1e-3);
  REQUIRE(rep.max_rel_err < 1e-4,
          "censored grad check on bounds, rel=" + std::to_string(rep.max_rel_err));
  pass("censored grad check at bounds (rel < 1e-4)");
}

static void test_censored_pdf() {
  REQUIRE(censored_pdf(-0.1, 0.3, 1.0, 0.0, 1.0) == 0.0, "below lower -> 0");
  REQUIRE(censored_pdf(1.1, 0.3, 1.0, 0.0, 1.0) == 0.0, "above upper -> 0");
  require_close(censored_pdf(0.0, 0.0, 1.0, 0.0, kInf), 0.5, 1e-15,
                "mass at lower with mu = lower");

  // Normalization: masses + interior integral = 1 via the quadrature oracle.
  Rng rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    const double mu = rng.uniform(-2.0, 2.0);
    const double s = rng.uniform(0.1, 2.0);
    const double lo = trial % 2 == 0 ? rng.uniform(-3.0, -0.5) : -kInf;
    const double hi = trial % 3 == 0 ? rng.uniform(0.5, 3.0) : kInf;
    const auto r = oracles::oracle_censored_normalization(mu, s, lo, hi);
    require_close(r.value, 1.0, 1e-8, "censored density normalizes to 1");
    // Consistency of the point masses against the library pdf.
    if (std::isfinite(lo))
      require_rel(censored_pdf(lo, mu, s, lo, hi),
                  std::exp(oracles::oracle_log_phi((lo - mu) / s).value), 1e-10,
                  "lower mass vs oracle");
    if (std::isfinite(hi))
      require_rel(censored_pdf(hi, mu, s, lo, hi),
                  std::exp(oracles::oracle_log_phi((mu - hi) / s).value), 1e-10,
                  "upper mass vs oracle");
  }
  // Mass concentrates at the lower bound when mu = lower - 5s; still sums to 1.
  const auto conc = oracles::oracle_censored_normalization(-5.0, 1.0, 0.0, 1.0);
  require_close(conc.value, 1.0, 1e-8, "concentrated case still normalizes");
  pass("censored_pdf and normalization oracle");
}

int main() {
  test_clip();
  test_gaussian_nll_values();
  test_censored_nll_values();
  test_censored_masked_invariance();
  test_censored_gradient_signs();
  test_censored_grad_check_on_bound();
  test_censored_pdf();
  std::cout << "test_distributions: all sections passed\n";
  return 0;
}
