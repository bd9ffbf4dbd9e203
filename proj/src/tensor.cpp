#include "declip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "declip/errors.hpp"
#include "declip/tensor_detail.hpp"

namespace declip::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool on) { g_grad_enabled = on; }

std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw InvalidArgument("tensor: non-positive dim in " + shape_str(s));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

std::vector<std::int64_t> strides_of(const Shape& s) {
  std::vector<std::int64_t> st(s.size());
  std::int64_t acc = 1;
  for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
    st[i] = acc;
    acc *= s[i];
  }
  return st;
}

Tensor make_op(const char* op, Shape shape, std::vector<double> values,
               const std::vector<Tensor>& parents,
               std::function<void(Node&)> backward) {
  if (static_cast<std::int64_t>(values.size()) != numel(shape))
    throw InvalidArgument(std::string(op) + ": value count does not match " +
                          shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->op = op;
  bool rg = false;
  if (grad_enabled()) {
    for (const Tensor& p : parents)
      if (p.defined() && p.node()->requires_grad) rg = true;
  }
  n->requires_grad = rg;
  if (rg) {
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined())
    throw InvalidArgument(std::string(op) + ": undefined tensor argument");
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw InvalidArgument(std::string(op) + ": shape mismatch " +
                          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

using detail::check_defined;
using detail::check_same_shape;
using detail::make_op;
using detail::strides_of;

// ---- Tensor basics ----

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (static_cast<std::int64_t>(values.size()) != numel(shape))
    throw InvalidArgument("constant: value count does not match " +
                          shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::variable(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node()->requires_grad = true;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::int64_t n = numel(shape);
  Tensor t = constant(std::move(shape),
                      std::vector<double>(static_cast<std::size_t>(n), value));
  t.node()->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

const Shape& Tensor::shape() const {
  check_defined(*this, "shape");
  return node_->shape;
}

int Tensor::dim(int axis) const {
  const Shape& s = shape();
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw InvalidArgument("dim: axis out of range for " + shape_str(s));
  return s[axis];
}

std::int64_t Tensor::size() const {
  check_defined(*this, "size");
  return static_cast<std::int64_t>(node_->values.size());
}

bool Tensor::requires_grad() const {
  check_defined(*this, "requires_grad");
  return node_->requires_grad;
}

const char* Tensor::op() const {
  check_defined(*this, "op");
  return node_->op;
}

std::vector<Tensor> Tensor::parents() const {
  check_defined(*this, "parents");
  std::vector<Tensor> out;
  out.reserve(node_->parents.size());
  for (const auto& p : node_->parents) out.emplace_back(p);
  return out;
}

std::span<const double> Tensor::values() const {
  check_defined(*this, "values");
  return {node_->values.data(), node_->values.size()};
}

std::span<double> Tensor::raw_values() {
  check_defined(*this, "raw_values");
  return {node_->values.data(), node_->values.size()};
}

bool Tensor::has_grad() const {
  check_defined(*this, "has_grad");
  return !node_->grad.empty();
}

std::span<const double> Tensor::grad() const {
  check_defined(*this, "grad");
  return {node_->grad.data(), node_->grad.size()};
}

double Tensor::item() const {
  check_defined(*this, "item");
  if (node_->values.size() != 1)
    throw InvalidArgument("item: tensor is not a scalar, shape " +
                          shape_str(node_->shape));
  return node_->values[0];
}

void Tensor::zero_grad() {
  check_defined(*this, "zero_grad");
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  check_defined(*this, "detach");
  return Tensor::constant(node_->shape, node_->values);
}

void Tensor::backward() const {
  check_defined(*this, "backward");
  if (node_->values.size() != 1)
    throw InvalidArgument("backward: output is not a scalar, shape " +
                          shape_str(node_->shape));
  if (!node_->requires_grad)
    throw InvalidArgument("backward: output does not require grad");

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& top = stack.back();
    Node* n = top.first;
    if (top.second < n->parents.size()) {
      Node* p = n->parents[top.second++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Leaf grads persist across calls (accumulation); interior grads are
  // per-sweep scratch.
  for (Node* n : order)
    if (n->backward) {
      n->ensure_grad();
      std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  check_defined(a, "add");
  check_defined(b, "add");
  check_same_shape(a, b, "add");
  std::vector<double> v(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
  return make_op("add", a.shape(), std::move(v), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node* p = self.parents[k].get();
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        p->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_defined(a, "sub");
  check_defined(b, "sub");
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
  return make_op("sub", a.shape(), std::move(v), {a, b}, [](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pb->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_defined(a, "mul");
  check_defined(b, "mul");
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
  return make_op("mul", a.shape(), std::move(v), {a, b}, [](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pa->grad[i] += self.grad[i] * pb->values[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pb->grad[i] += self.grad[i] * pa->values[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  check_defined(a, "add_scalar");
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x += c;
  return make_op("add_scalar", a.shape(), std::move(v), {a}, [](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += self.grad[i];
  });
}

Tensor scale(const Tensor& a, double c) {
  check_defined(a, "scale");
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= c;
  return make_op("scale", a.shape(), std::move(v), {a}, [c](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += c * self.grad[i];
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor leaky_relu(const Tensor& x, double slope) {
  check_defined(x, "leaky_relu");
  const auto xv = x.values();
  std::vector<double> v(xv.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
  return make_op("leaky_relu", x.shape(), std::move(v), {x}, [slope](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += self.grad[i] * (p->values[i] > 0.0 ? 1.0 : slope);
  });
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  check_defined(x, "prelu");
  check_defined(slope, "prelu");
  if (slope.size() != 1)
    throw InvalidArgument("prelu: slope must be a single element, got " +
                          shape_str(slope.shape()));
  const double a = slope.values()[0];
  const auto xv = x.values();
  std::vector<double> v(xv.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = xv[i] > 0.0 ? xv[i] : a * xv[i];
  return make_op("prelu", x.shape(), std::move(v), {x, slope}, [](Node& self) {
    Node* px = self.parents[0].get();
    Node* pa = self.parents[1].get();
    const double a = pa->values[0];
    if (px->requires_grad) {
      px->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        px->grad[i] += self.grad[i] * (px->values[i] > 0.0 ? 1.0 : a);
    }
    if (pa->requires_grad) {
      pa->ensure_grad();
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (px->values[i] <= 0.0) acc += self.grad[i] * px->values[i];
      pa->grad[0] += acc;
    }
  });
}

Tensor sqrt(const Tensor& x) {
  check_defined(x, "sqrt");
  const auto xv = x.values();
  std::vector<double> v(xv.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (xv[i] < 0.0) throw InvalidArgument("sqrt: negative input");
    v[i] = std::sqrt(xv[i]);
  }
  return make_op("sqrt", x.shape(), std::move(v), {x}, [](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.values[i];
      p->grad[i] += self.grad[i] * 0.5 / (y > 0.0 ? y : 1e-300);
    }
  });
}

Tensor log(const Tensor& x) {
  check_defined(x, "log");
  const auto xv = x.values();
  std::vector<double> v(xv.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(xv[i] > 0.0)) throw InvalidArgument("log: non-positive input");
    v[i] = std::log(xv[i]);
  }
  return make_op("log", x.shape(), std::move(v), {x}, [](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += self.grad[i] / p->values[i];
  });
}

Tensor clamp_min(const Tensor& x, double lo) {
  check_defined(x, "clamp_min");
  const auto xv = x.values();
  std::vector<double> v(xv.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(xv[i], lo);
  return make_op("clamp_min", x.shape(), std::move(v), {x}, [lo](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (p->values[i] > lo) p->grad[i] += self.grad[i];
  });
}

Tensor complex_magnitude(const Tensor& re, const Tensor& im) {
  check_defined(re, "complex_magnitude");
  check_defined(im, "complex_magnitude");
  check_same_shape(re, im, "complex_magnitude");
  const auto rv = re.values();
  const auto iv = im.values();
  std::vector<double> v(rv.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::sqrt(rv[i] * rv[i] + iv[i] * iv[i]);
  return make_op("complex_magnitude", re.shape(), std::move(v), {re, im},
                 [](Node& self) {
                   Node* pr = self.parents[0].get();
                   Node* pi = self.parents[1].get();
                   if (pr->requires_grad) pr->ensure_grad();
                   if (pi->requires_grad) pi->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const double m = self.values[i];
                     if (m <= 0.0) continue;  // gradient defined 0 at origin
                     const double g = self.grad[i] / m;
                     if (pr->requires_grad) pr->grad[i] += g * pr->values[i];
                     if (pi->requires_grad) pi->grad[i] += g * pi->values[i];
                   }
                 });
}

// ---- reductions ----

Tensor sum(const Tensor& x) {
  check_defined(x, "sum");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_op("sum", {1}, {acc}, {x}, [](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    const double g = self.grad[0];
    for (double& gv : p->grad) gv += g;
  });
}

Tensor mean(const Tensor& x) {
  check_defined(x, "mean");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  return make_op("mean", {1}, {acc * inv}, {x}, [inv](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    const double g = self.grad[0] * inv;
    for (double& gv : p->grad) gv += g;
  });
}

Tensor abs_sum(const Tensor& x) {
  check_defined(x, "abs_sum");
  double acc = 0.0;
  for (double v : x.values()) acc += std::abs(v);
  return make_op("abs_sum", {1}, {acc}, {x}, [](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < p->values.size(); ++i) {
      const double v = p->values[i];
      if (v > 0.0)
        p->grad[i] += g;
      else if (v < 0.0)
        p->grad[i] -= g;  // sign(0) = 0
    }
  });
}

// ---- shape ops ----

Tensor reshape(const Tensor& x, Shape shape) {
  check_defined(x, "reshape");
  std::int64_t known = 1;
  int infer = -1;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw InvalidArgument("reshape: more than one -1 dim");
      infer = i;
    } else if (shape[i] <= 0) {
      throw InvalidArgument("reshape: bad dim in " + shape_str(shape));
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.size() % known != 0)
      throw InvalidArgument("reshape: cannot infer dim for " + shape_str(shape) +
                            " from " + shape_str(x.shape()));
    shape[infer] = static_cast<int>(x.size() / known);
    known *= shape[infer];
  }
  if (known != x.size())
    throw InvalidArgument("reshape: element count mismatch " +
                          shape_str(x.shape()) + " vs " + shape_str(shape));
  std::vector<double> v(x.values().begin(), x.values().end());
  return make_op("reshape", std::move(shape), std::move(v), {x}, [](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      p->grad[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& x, std::vector<int> order) {
  check_defined(x, "permute");
  const Shape& in = x.shape();
  const int rank = static_cast<int>(in.size());
  if (static_cast<int>(order.size()) != rank)
    throw InvalidArgument("permute: order rank mismatch for " + shape_str(in));
  std::vector<bool> seen(rank, false);
  Shape out_shape(rank);
  for (int d = 0; d < rank; ++d) {
    if (order[d] < 0 || order[d] >= rank || seen[order[d]])
      throw InvalidArgument("permute: order is not a permutation");
    seen[order[d]] = true;
    out_shape[d] = in[order[d]];
  }
  const auto in_strides = strides_of(in);
  std::vector<std::int64_t> gather(rank);  // stride in input per output axis
  for (int d = 0; d < rank; ++d) gather[d] = in_strides[order[d]];

  const std::int64_t n = x.size();
  const auto xv = x.values();
  std::vector<double> v(static_cast<std::size_t>(n));
  const auto out_strides = strides_of(out_shape);
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t rem = i, src = 0;
    for (int d = 0; d < rank; ++d) {
      const std::int64_t idx = rem / out_strides[d];
      rem -= idx * out_strides[d];
      src += idx * gather[d];
    }
    v[static_cast<std::size_t>(i)] = xv[static_cast<std::size_t>(src)];
  }
  return make_op("permute", std::move(out_shape), std::move(v), {x},
                 [gather, out_strides, rank](Node& self) {
                   Node* p = self.parents[0].get();
                   p->ensure_grad();
                   const std::int64_t n = static_cast<std::int64_t>(self.grad.size());
                   for (std::int64_t i = 0; i < n; ++i) {
                     std::int64_t rem = i, src = 0;
                     for (int d = 0; d < rank; ++d) {
                       const std::int64_t idx = rem / out_strides[d];
                       rem -= idx * out_strides[d];
                       src += idx * gather[d];
                     }
                     p->grad[static_cast<std::size_t>(src)] +=
                         self.grad[static_cast<std::size_t>(i)];
                   }
                 });
}

Tensor transpose(const Tensor& x, int axis_a, int axis_b) {
  check_defined(x, "transpose");
  const int rank = static_cast<int>(x.shape().size());
  if (axis_a < 0 || axis_a >= rank || axis_b < 0 || axis_b >= rank)
    throw InvalidArgument("transpose: axis out of range for " +
                          shape_str(x.shape()));
  std::vector<int> order(rank);
  for (int i = 0; i < rank; ++i) order[i] = i;
  std::swap(order[axis_a], order[axis_b]);
  return permute(x, order);
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw InvalidArgument("concat: no inputs");
  for (const Tensor& t : xs) check_defined(t, "concat");
  const Shape& s0 = xs[0].shape();
  const int rank = static_cast<int>(s0.size());
  if (axis < 0 || axis >= rank)
    throw InvalidArgument("concat: axis out of range for " + shape_str(s0));
  Shape out_shape = s0;
  int total_axis = 0;
  for (const Tensor& t : xs) {
    const Shape& s = t.shape();
    if (static_cast<int>(s.size()) != rank)
      throw InvalidArgument("concat: rank mismatch " + shape_str(s0) + " vs " +
                            shape_str(s));
    for (int d = 0; d < rank; ++d)
      if (d != axis && s[d] != s0[d])
        throw InvalidArgument("concat: shape mismatch " + shape_str(s0) +
                              " vs " + shape_str(s));
    total_axis += s[axis];
  }
  out_shape[axis] = total_axis;

  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[d];
  for (int d = axis + 1; d < rank; ++d) inner *= s0[d];

  std::vector<double> v(static_cast<std::size_t>(numel(out_shape)));
  const std::int64_t out_row = static_cast<std::int64_t>(total_axis) * inner;
  std::int64_t offset = 0;
  for (const Tensor& t : xs) {
    const auto tv = t.values();
    const std::int64_t in_row = static_cast<std::int64_t>(t.shape()[axis]) * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(tv.data() + o * in_row, in_row,
                  v.data() + o * out_row + offset);
    offset += in_row;
  }
  return make_op("concat", std::move(out_shape), std::move(v), xs,
                 [outer, inner, out_row](Node& self) {
                   std::int64_t offset = 0;
                   for (auto& pp : self.parents) {
                     Node* p = pp.get();
                     // axis extent recoverable from element count
                     const std::int64_t in_row =
                         static_cast<std::int64_t>(p->values.size()) /
                         (outer == 0 ? 1 : outer);
                     if (p->requires_grad) {
                       p->ensure_grad();
                       for (std::int64_t o = 0; o < outer; ++o)
                         for (std::int64_t i = 0; i < in_row; ++i)
                           p->grad[static_cast<std::size_t>(o * in_row + i)] +=
                               self.grad[static_cast<std::size_t>(
                                   o * out_row + offset + i)];
                     }
                     offset += in_row;
                   }
                   (void)inner;
                 });
}

Tensor slice(const Tensor& x, int axis, int start, int length) {
  check_defined(x, "slice");
  const Shape& s = x.shape();
  const int rank = static_cast<int>(s.size());
  if (axis < 0 || axis >= rank)
    throw InvalidArgument("slice: axis out of range for " + shape_str(s));
  if (start < 0 || length <= 0 || start + length > s[axis])
    throw InvalidArgument("slice: range [" + std::to_string(start) + "," +
                          std::to_string(start + length) + ") out of bounds for " +
                          shape_str(s));
  Shape out_shape = s;
  out_shape[axis] = length;
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s[d];
  for (int d = axis + 1; d < rank; ++d) inner *= s[d];
  const std::int64_t in_row = static_cast<std::int64_t>(s[axis]) * inner;
  const std::int64_t out_row = static_cast<std::int64_t>(length) * inner;
  const std::int64_t off = static_cast<std::int64_t>(start) * inner;

  const auto xv = x.values();
  std::vector<double> v(static_cast<std::size_t>(outer * out_row));
  for (std::int64_t o = 0; o < outer; ++o)
    std::copy_n(xv.data() + o * in_row + off, out_row, v.data() + o * out_row);
  return make_op("slice", std::move(out_shape), std::move(v), {x},
                 [outer, in_row, out_row, off](Node& self) {
                   Node* p = self.parents[0].get();
                   p->ensure_grad();
                   for (std::int64_t o = 0; o < outer; ++o)
                     for (std::int64_t i = 0; i < out_row; ++i)
                       p->grad[static_cast<std::size_t>(o * in_row + off + i)] +=
                           self.grad[static_cast<std::size_t>(o * out_row + i)];
                 });
}

Tensor expand(const Tensor& x, const Shape& target) {
  check_defined(x, "expand");
  const Shape& in = x.shape();
  const int out_rank = static_cast<int>(target.size());
  const int in_rank = static_cast<int>(in.size());
  if (in_rank > out_rank)
    throw InvalidArgument("expand: cannot drop axes, " + shape_str(in) +
                          " to " + shape_str(target));
  // Right-aligned: output axis d maps to input axis d - (out_rank - in_rank).
  std::vector<std::int64_t> gather(out_rank, 0);
  const auto in_strides = strides_of(in);
  for (int d = 0; d < out_rank; ++d) {
    const int id = d - (out_rank - in_rank);
    if (id < 0) continue;
    if (in[id] == target[d])
      gather[d] = in_strides[id];
    else if (in[id] != 1)
      throw InvalidArgument("expand: shape " + shape_str(in) +
                            " does not broadcast to " + shape_str(target));
  }
  const std::int64_t n = numel(target);
  const auto out_strides = strides_of(target);
  const auto xv = x.values();
  std::vector<double> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t rem = i, src = 0;
    for (int d = 0; d < out_rank; ++d) {
      const std::int64_t idx = rem / out_strides[d];
      rem -= idx * out_strides[d];
      src += idx * gather[d];
    }
    v[static_cast<std::size_t>(i)] = xv[static_cast<std::size_t>(src)];
  }
  return make_op("expand", target, std::move(v), {x},
                 [gather, out_strides, out_rank](Node& self) {
                   Node* p = self.parents[0].get();
                   p->ensure_grad();
                   const std::int64_t n = static_cast<std::int64_t>(self.grad.size());
                   for (std::int64_t i = 0; i < n; ++i) {
                     std::int64_t rem = i, src = 0;
                     for (int d = 0; d < out_rank; ++d) {
                       const std::int64_t idx = rem / out_strides[d];
                       rem -= idx * out_strides[d];
                       src += idx * gather[d];
                     }
                     p->grad[static_cast<std::size_t>(src)] +=
                         self.grad[static_cast<std::size_t>(i)];
                   }
                 });
}

}  // namespace declip::ad
