#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fieldgen::ad {

using Shape = std::vector<int64_t>;

int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

// One recorded operation. `backward` reads this node's grad and accumulates
// into the parents' grads; parents are kept alive through the shared_ptrs.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  int64_t size() const { return static_cast<int64_t>(value.size()); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantics handle onto the graph. Copying a Tensor aliases the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double v, bool requires_grad = false);
  static Tensor from_values(const Shape& shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t size() const { return node_->size(); }
  int64_t dim(int i) const { return node_->shape[i]; }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }

  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }

  // Scalar convenience for loss values.
  double item() const;

  // Reverse pass from a scalar output. Visits each reachable node exactly
  // once, in reverse topological order. Grads accumulate until zero_grad.
  void backward() const;
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
// a*x + b with scalar coefficients.
Tensor affine(const Tensor& x, double a, double b);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor erf(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
// log Phi(x) with analytic backward phi/Phi; finite through the deep tails.
Tensor log_std_normal_cdf(const Tensor& x);

// ---- reductions ----
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// ---- shape ----
Tensor reshape(const Tensor& x, const Shape& shape);
// Numpy-style broadcast: trailing-aligned, source dims of 1 expand.
Tensor broadcast_to(const Tensor& x, const Shape& shape);
Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len);
Tensor concat(const Tensor& a, const Tensor& b, int axis);

// ---- linear algebra / conv ----
Tensor matmul(const Tensor& a, const Tensor& b);  // [M,K]x[K,N]
// x: [N,Ci,H,W], w: [Co,Ci,kh,kw], optional bias [Co]. Zero padding `pad`,
// stride `stride`; strided 2x2/stride-2 calls double as the downsampler.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad);
// Nearest-neighbour upsample by 2 in both spatial dims ([N,C,H,W]).
Tensor upsample2x(const Tensor& x);

}  // namespace fieldgen::ad
