#include "fieldgen/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "fieldgen/numeric.hpp"

namespace fieldgen::ad {

namespace {

using MatRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

std::shared_ptr<Node> make_node(Shape shape, const char* op,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.resize(static_cast<size_t>(shape_size(n->shape)));
  n->op = op;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  n->requires_grad = needs;
  // Constants do not record the graph; inference stays allocation-light.
  if (needs) n->parents = std::move(parents);
  return n;
}

void accum(Node* p, int64_t i, double g) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  p->grad[static_cast<size_t>(i)] += g;
}

// Elementwise unary op; dfn(x, y) is the derivative given input and output.
template <typename F, typename DF>
Tensor unary(const Tensor& x, const char* op, F fn, DF dfn) {
  auto n = make_node(x.shape(), op, {x.node()});
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = fn(xv[i]);
  if (n->requires_grad) {
    Node* xp = x.node().get();
    n->backward = [xp, dfn](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.value.size(); ++i)
        xp->grad[i] += self.grad[i] * dfn(xp->value[i], self.value[i]);
    };
  }
  return Tensor(n);
}

// Strides of `src` aligned against a broadcast target shape; 0 where the
// source dimension is 1 or missing.
std::vector<int64_t> aligned_strides(const Shape& src, const Shape& dst) {
  const int sd = static_cast<int>(src.size()), dd = static_cast<int>(dst.size());
  check(sd <= dd, "broadcast: source has more dims than target");
  std::vector<int64_t> strides(dd, 0);
  int64_t s = 1;
  for (int i = sd - 1; i >= 0; --i) {
    const int j = dd - sd + i;
    check(src[i] == dst[j] || src[i] == 1,
          "broadcast: incompatible shapes " + shape_str(src) + " -> " +
              shape_str(dst));
    strides[j] = (src[i] == 1) ? 0 : s;
    s *= src[i];
  }
  return strides;
}

}  // namespace

int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    check(d >= 0, "negative dimension");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(static_cast<size_t>(shape_size(shape)), 0.0);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
  Tensor t = zeros(shape, requires_grad);
  std::fill(t.values().begin(), t.values().end(), v);
  return t;
}

Tensor Tensor::from_values(const Shape& shape, std::vector<double> values,
                           bool requires_grad) {
  check(static_cast<int64_t>(values.size()) == shape_size(shape),
        "from_values: size mismatch");
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from_values({1}, {v}); }

double Tensor::item() const {
  check(size() == 1, "item(): tensor is not scalar");
  return node_->value[0];
}

void Tensor::backward() const {
  check(size() == 1, "backward(): output must be scalar");
  check(node_->requires_grad, "backward(): output does not require grad");

  // Iterative post-order DFS; recursion depth would track graph depth.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
  auto n = make_node(a.shape(), "add", {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] + bv[i];
  if (n->requires_grad) {
    Node* ap = a.node().get();
    Node* bp = b.node().get();
    n->backward = [ap, bp](Node& self) {
      for (size_t i = 0; i < self.value.size(); ++i) {
        accum(ap, i, self.grad[i]);
        accum(bp, i, self.grad[i]);
      }
    };
  }
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "sub: shape mismatch");
  auto n = make_node(a.shape(), "sub", {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] - bv[i];
  if (n->requires_grad) {
    Node* ap = a.node().get();
    Node* bp = b.node().get();
    n->backward = [ap, bp](Node& self) {
      for (size_t i = 0; i < self.value.size(); ++i) {
        accum(ap, i, self.grad[i]);
        accum(bp, i, -self.grad[i]);
      }
    };
  }
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
  auto n = make_node(a.shape(), "mul", {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] * bv[i];
  if (n->requires_grad) {
    Node* ap = a.node().get();
    Node* bp = b.node().get();
    n->backward = [ap, bp](Node& self) {
      for (size_t i = 0; i < self.value.size(); ++i) {
        accum(ap, i, self.grad[i] * bp->value[i]);
        accum(bp, i, self.grad[i] * ap->value[i]);
      }
    };
  }
  return Tensor(n);
}

Tensor neg(const Tensor& a) { return affine(a, -1.0, 0.0); }

Tensor affine(const Tensor& x, double a, double b) {
  auto n = make_node(x.shape(), "affine", {x.node()});
  const auto& xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = a * xv[i] + b;
  if (n->requires_grad) {
    Node* xp = x.node().get();
    n->backward = [xp, a](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.value.size(); ++i)
        xp->grad[i] += a * self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor exp(const Tensor& x) {
  return unary(x, "exp", [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(x, "log", [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Tensor erf(const Tensor& x) {
  return unary(x, "erf", [](double v) { return std::erf(v); },
               [](double v, double) {
                 return 1.1283791670955125738961589031215 * std::exp(-v * v);
               });
}

Tensor tanh(const Tensor& x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  return unary(x, "gelu", [](double v) { return fieldgen::gelu(v); },
               [](double v, double) { return fieldgen::d_gelu(v); });
}

Tensor log_std_normal_cdf(const Tensor& x) {
  return unary(x, "log_std_normal_cdf",
               [](double v) { return fieldgen::log_std_normal_cdf(v); },
               [](double v, double y) {
                 return std::exp(fieldgen::log_normal_pdf(v) - y);
               });
}

// ---- reductions ----

Tensor sum_all(const Tensor& x) {
  auto n = make_node({1}, "sum", {x.node()});
  double s = 0.0;
  for (double v : x.values()) s += v;
  n->value[0] = s;
  if (n->requires_grad) {
    Node* xp = x.node().get();
    n->backward = [xp](Node& self) {
      xp->ensure_grad();
      const double g = self.grad[0];
      for (auto& gv : xp->grad) gv += g;
    };
  }
  return Tensor(n);
}

Tensor mean_all(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.size());
  return affine(sum_all(x), inv, 0.0);
}

// ---- shape ----

Tensor reshape(const Tensor& x, const Shape& shape) {
  check(shape_size(shape) == x.size(), "reshape: element count mismatch");
  auto n = make_node(shape, "reshape", {x.node()});
  n->value = x.values();
  if (n->requires_grad) {
    Node* xp = x.node().get();
    n->backward = [xp](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.value.size(); ++i)
        xp->grad[i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  const auto strides = aligned_strides(x.shape(), shape);
  auto n = make_node(shape, "broadcast", {x.node()});
  const int nd = static_cast<int>(shape.size());
  const int64_t total = shape_size(shape);
  const auto& xv = x.values();

  std::vector<int64_t> idx(nd, 0);
  int64_t src = 0;
  for (int64_t out = 0; out < total; ++out) {
    n->value[static_cast<size_t>(out)] = xv[static_cast<size_t>(src)];
    for (int d = nd - 1; d >= 0; --d) {
      src += strides[d];
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
      src -= strides[d] * shape[d];
    }
  }
  if (n->requires_grad) {
    Node* xp = x.node().get();
    Shape dst = shape;
    n->backward = [xp, dst, strides](Node& self) {
      xp->ensure_grad();
      const int nd = static_cast<int>(dst.size());
      std::vector<int64_t> idx(nd, 0);
      int64_t src = 0;
      const int64_t total = static_cast<int64_t>(self.value.size());
      for (int64_t out = 0; out < total; ++out) {
        xp->grad[static_cast<size_t>(src)] += self.grad[static_cast<size_t>(out)];
        for (int d = nd - 1; d >= 0; --d) {
          src += strides[d];
          if (++idx[d] < dst[d]) break;
          idx[d] = 0;
          src -= strides[d] * dst[d];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len) {
  const auto& s = x.shape();
  check(axis >= 0 && axis < static_cast<int>(s.size()), "slice: bad axis");
  check(start >= 0 && len >= 0 && start + len <= s[axis], "slice: out of range");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];

  Shape out_shape = s;
  out_shape[axis] = len;
  auto n = make_node(out_shape, "slice", {x.node()});
  const auto& xv = x.values();
  const int64_t src_axis = s[axis];
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t a = 0; a < len; ++a)
      std::copy_n(xv.begin() + (o * src_axis + start + a) * inner, inner,
                  n->value.begin() + (o * len + a) * inner);
  if (n->requires_grad) {
    Node* xp = x.node().get();
    n->backward = [xp, outer, inner, len, start, src_axis](Node& self) {
      xp->ensure_grad();
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t a = 0; a < len; ++a) {
          const double* g = self.grad.data() + (o * len + a) * inner;
          double* dst = xp->grad.data() + (o * src_axis + start + a) * inner;
          for (int64_t i = 0; i < inner; ++i) dst[i] += g[i];
        }
    };
  }
  return Tensor(n);
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  check(sa.size() == sb.size(), "concat: rank mismatch");
  check(axis >= 0 && axis < static_cast<int>(sa.size()), "concat: bad axis");
  for (size_t i = 0; i < sa.size(); ++i)
    check(static_cast<int>(i) == axis || sa[i] == sb[i],
          "concat: shape mismatch off-axis");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sa[i];
  for (size_t i = axis + 1; i < sa.size(); ++i) inner *= sa[i];
  const int64_t la = sa[axis], lb = sb[axis];

  Shape out_shape = sa;
  out_shape[axis] = la + lb;
  auto n = make_node(out_shape, "concat", {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(av.begin() + o * la * inner, la * inner,
                n->value.begin() + o * (la + lb) * inner);
    std::copy_n(bv.begin() + o * lb * inner, lb * inner,
                n->value.begin() + (o * (la + lb) + la) * inner);
  }
  if (n->requires_grad) {
    Node* ap = a.node().get();
    Node* bp = b.node().get();
    n->backward = [ap, bp, outer, inner, la, lb](Node& self) {
      for (int64_t o = 0; o < outer; ++o) {
        const double* g = self.grad.data() + o * (la + lb) * inner;
        if (ap->requires_grad) {
          ap->ensure_grad();
          double* dst = ap->grad.data() + o * la * inner;
          for (int64_t i = 0; i < la * inner; ++i) dst[i] += g[i];
        }
        if (bp->requires_grad) {
          bp->ensure_grad();
          double* dst = bp->grad.data() + o * lb * inner;
          for (int64_t i = 0; i < lb * inner; ++i) dst[i] += g[la * inner + i];
        }
      }
    };
  }
  return Tensor(n);
}

// ---- linear algebra / conv ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.shape().size() == 2 && b.shape().size() == 2, "matmul: need 2-d");
  const int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), p = b.dim(1);
  check(k == k2, "matmul: inner dim mismatch");
  auto n = make_node({m, p}, "matmul", {a.node(), b.node()});
  CMapRM A(a.values().data(), m, k);
  CMapRM B(b.values().data(), k, p);
  MapRM C(n->value.data(), m, p);
  C.noalias() = A * B;
  if (n->requires_grad) {
    Node* ap = a.node().get();
    Node* bp = b.node().get();
    n->backward = [ap, bp, m, k, p](Node& self) {
      CMapRM G(self.grad.data(), m, p);
      if (ap->requires_grad) {
        ap->ensure_grad();
        CMapRM B(bp->value.data(), k, p);
        MapRM dA(ap->grad.data(), m, k);
        dA.noalias() += G * B.transpose();
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        CMapRM A(ap->value.data(), m, k);
        MapRM dB(bp->grad.data(), k, p);
        dB.noalias() += A.transpose() * G;
      }
    };
  }
  return Tensor(n);
}

namespace {

struct ConvDims {
  int64_t n, ci, h, w, co, kh, kw, ho, wo;
  int stride, pad;
};

ConvDims conv_dims(const Shape& xs, const Shape& ws, int stride, int pad) {
  check(xs.size() == 4 && ws.size() == 4, "conv2d: need 4-d input and weight");
  check(xs[1] == ws[1], "conv2d: channel mismatch");
  check(stride >= 1, "conv2d: bad stride");
  ConvDims d;
  d.n = xs[0];
  d.ci = xs[1];
  d.h = xs[2];
  d.w = xs[3];
  d.co = ws[0];
  d.kh = ws[2];
  d.kw = ws[3];
  d.stride = stride;
  d.pad = pad;
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  check(d.ho >= 1 && d.wo >= 1, "conv2d: kernel larger than padded input");
  return d;
}

void im2col(const double* x, const ConvDims& d, double* col) {
  // col: [ci*kh*kw, ho*wo] row-major
  for (int64_t c = 0; c < d.ci; ++c) {
    const double* xc = x + c * d.h * d.w;
    for (int64_t ki = 0; ki < d.kh; ++ki)
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        double* row = col + ((c * d.kh + ki) * d.kw + kj) * d.ho * d.wo;
        for (int64_t ho = 0; ho < d.ho; ++ho) {
          const int64_t ih = ho * d.stride - d.pad + ki;
          if (ih < 0 || ih >= d.h) {
            std::fill_n(row + ho * d.wo, d.wo, 0.0);
            continue;
          }
          for (int64_t wo = 0; wo < d.wo; ++wo) {
            const int64_t iw = wo * d.stride - d.pad + kj;
            row[ho * d.wo + wo] =
                (iw >= 0 && iw < d.w) ? xc[ih * d.w + iw] : 0.0;
          }
        }
      }
  }
}

void col2im_add(const double* col, const ConvDims& d, double* dx) {
  for (int64_t c = 0; c < d.ci; ++c) {
    double* xc = dx + c * d.h * d.w;
    for (int64_t ki = 0; ki < d.kh; ++ki)
      for (int64_t kj = 0; kj < d.kw; ++kj) {
        const double* row = col + ((c * d.kh + ki) * d.kw + kj) * d.ho * d.wo;
        for (int64_t ho = 0; ho < d.ho; ++ho) {
          const int64_t ih = ho * d.stride - d.pad + ki;
          if (ih < 0 || ih >= d.h) continue;
          for (int64_t wo = 0; wo < d.wo; ++wo) {
            const int64_t iw = wo * d.stride - d.pad + kj;
            if (iw >= 0 && iw < d.w) xc[ih * d.w + iw] += row[ho * d.wo + wo];
          }
        }
      }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  const ConvDims d = conv_dims(x.shape(), w.shape(), stride, pad);
  const bool has_bias = b.defined();
  if (has_bias)
    check(b.shape() == Shape{d.co}, "conv2d: bias shape must be [Co]");

  std::vector<std::shared_ptr<Node>> parents{x.node(), w.node()};
  if (has_bias) parents.push_back(b.node());
  auto n = make_node({d.n, d.co, d.ho, d.wo}, "conv2d", std::move(parents));

  const int64_t kdim = d.ci * d.kh * d.kw;
  const int64_t odim = d.ho * d.wo;
  std::vector<double> col(static_cast<size_t>(kdim * odim));
  CMapRM W(w.values().data(), d.co, kdim);
  for (int64_t s = 0; s < d.n; ++s) {
    im2col(x.values().data() + s * d.ci * d.h * d.w, d, col.data());
    CMapRM Col(col.data(), kdim, odim);
    MapRM Out(n->value.data() + s * d.co * odim, d.co, odim);
    Out.noalias() = W * Col;
    if (has_bias) {
      const auto& bv = b.values();
      for (int64_t c = 0; c < d.co; ++c)
        Out.row(c).array() += bv[static_cast<size_t>(c)];
    }
  }

  if (n->requires_grad) {
    Node* xp = x.node().get();
    Node* wp = w.node().get();
    Node* bp = has_bias ? b.node().get() : nullptr;
    n->backward = [xp, wp, bp, d](Node& self) {
      const int64_t kdim = d.ci * d.kh * d.kw;
      const int64_t odim = d.ho * d.wo;
      std::vector<double> col(static_cast<size_t>(kdim * odim));
      std::vector<double> dcol;
      if (wp->requires_grad) wp->ensure_grad();
      if (xp->requires_grad) {
        xp->ensure_grad();
        dcol.resize(static_cast<size_t>(kdim * odim));
      }
      if (bp && bp->requires_grad) bp->ensure_grad();
      CMapRM W(wp->value.data(), d.co, kdim);
      for (int64_t s = 0; s < d.n; ++s) {
        CMapRM G(self.grad.data() + s * d.co * odim, d.co, odim);
        if (wp->requires_grad) {
          im2col(xp->value.data() + s * d.ci * d.h * d.w, d, col.data());
          CMapRM Col(col.data(), kdim, odim);
          MapRM dW(wp->grad.data(), d.co, kdim);
          dW.noalias() += G * Col.transpose();
        }
        if (xp->requires_grad) {
          MapRM dCol(dcol.data(), kdim, odim);
          dCol.noalias() = W.transpose() * G;
          col2im_add(dcol.data(), d, xp->grad.data() + s * d.ci * d.h * d.w);
        }
        if (bp && bp->requires_grad) {
          for (int64_t c = 0; c < d.co; ++c)
            bp->grad[static_cast<size_t>(c)] += G.row(c).sum();
        }
      }
    };
  }
  return Tensor(n);
}

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
  return conv2d(x, w, Tensor(), stride, pad);
}

Tensor upsample2x(const Tensor& x) {
  const auto& s = x.shape();
  check(s.size() == 4, "upsample2x: need 4-d");
  const int64_t n = s[0], c = s[1], h = s[2], w = s[3];
  auto out = make_node({n, c, 2 * h, 2 * w}, "upsample2x", {x.node()});
  const auto& xv = x.values();
  for (int64_t p = 0; p < n * c; ++p) {
    const double* src = xv.data() + p * h * w;
    double* dst = out->value.data() + p * 4 * h * w;
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        const double v = src[i * w + j];
        dst[(2 * i) * 2 * w + 2 * j] = v;
        dst[(2 * i) * 2 * w + 2 * j + 1] = v;
        dst[(2 * i + 1) * 2 * w + 2 * j] = v;
        dst[(2 * i + 1) * 2 * w + 2 * j + 1] = v;
      }
  }
  if (out->requires_grad) {
    Node* xp = x.node().get();
    out->backward = [xp, n, c, h, w](Node& self) {
      xp->ensure_grad();
      for (int64_t p = 0; p < n * c; ++p) {
        const double* g = self.grad.data() + p * 4 * h * w;
        double* dst = xp->grad.data() + p * h * w;
        for (int64_t i = 0; i < h; ++i)
          for (int64_t j = 0; j < w; ++j)
            dst[i * w + j] += g[(2 * i) * 2 * w + 2 * j] +
                              g[(2 * i) * 2 * w + 2 * j + 1] +
                              g[(2 * i + 1) * 2 * w + 2 * j] +
                              g[(2 * i + 1) * 2 * w + 2 * j + 1];
      }
    };
  }
  return Tensor(out);
}

}  // namespace fieldgen::ad
