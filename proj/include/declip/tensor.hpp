#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace declip::ad {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated on first use
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
  }
};

// Thread-local gradient recording switch. While disabled, ops compute values
// only: no parents, no backward closures, no gradient allocation.
bool grad_enabled();
void set_grad_enabled(bool on);

struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor variable(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int dim(int axis) const;
  std::int64_t size() const;
  bool requires_grad() const;
  const char* op() const;
  std::vector<Tensor> parents() const;

  std::span<const double> values() const;
  // Mutable view of the raw values; intended for parameter updates between
  // passes, never during an active forward/backward.
  std::span<double> raw_values();
  bool has_grad() const;
  std::span<const double> grad() const;
  double item() const;

  void zero_grad();

  // Reverse-mode sweep from a scalar. Gradients of intermediate nodes are
  // cleared per call; leaf gradients accumulate across calls.
  void backward() const;

  // Value copy detached from the graph.
  Tensor detach() const;

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---- elementwise & scalar ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor prelu(const Tensor& x, const Tensor& slope);  // slope: single-element
Tensor sqrt(const Tensor& x);
Tensor log(const Tensor& x);
Tensor clamp_min(const Tensor& x, double lo);
Tensor complex_magnitude(const Tensor& re, const Tensor& im);

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor abs_sum(const Tensor& x);

// ---- shape ----
Tensor reshape(const Tensor& x, Shape shape);  // one dim may be -1
Tensor transpose(const Tensor& x, int axis_a, int axis_b);
Tensor permute(const Tensor& x, std::vector<int> order);
Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor slice(const Tensor& x, int axis, int start, int length);
// numpy-style broadcast: size-1 axes repeat, leading axes may be added.
Tensor expand(const Tensor& x, const Shape& target);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);  // [M,K] x [K,N]
// y[..., n] = sum_k x[..., k] * w[n, k] (+ b[n]); pass undefined b to skip.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- convolutions (PyTorch layout and semantics, i.e. correlation) ----
// x [Cin, L], w [Cout, Cin/groups, K], b [Cout] or undefined.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding, int groups);
// x [Cin, H, W], w [Cout, Cin/groups, kh, kw].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding, int groups);
// x [Cin, H, W], w [Cin, Cout, kh, kw].
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int padding);

// ---- normalization & attention ----
Tensor softmax(const Tensor& x, int axis);
// (x - mean) / sqrt(var + eps) with statistics over the given axes (biased
// variance). Affine terms, when wanted, are separate expand/mul/add ops.
Tensor layer_stats_norm(const Tensor& x, std::vector<int> axes,
                        double eps = 1e-5);

struct AttentionCapture {
  // Softmax weights per call, shape [batch, heads, L, L] flattened.
  Shape shape;
  std::vector<double> weights;
};

// Fused scaled-dot-product self-attention over [B, L, C] inputs split into
// `heads` heads. Softmax weights are retained internally for the backward
// pass (never exposed as graph tensors); `capture`, when non-null, receives
// a copy for inspection.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            int heads, AttentionCapture* capture = nullptr);

// ---- signal ops ----
// 1-D only; pad < length per side (single reflection, no repeated edge).
Tensor pad_reflect(const Tensor& x, int left, int right);
// x [L] -> [T, win] with T = (L - win) / hop + 1.
Tensor frame(const Tensor& x, int win, int hop);
// frames [T, win] -> [(T-1)*hop + win]; out_len must equal that.
Tensor overlap_add(const Tensor& frames, int hop, int out_len);
// x [..., n] -> [..., 2, fft_size/2 + 1]; n <= fft_size, zero-padded.
// Channel 0 of the packed axis is the real part, channel 1 the imaginary.
Tensor rfft_pack(const Tensor& x, int fft_size);
// Spec-shaped variant: the (real, imag) pair as two tensors [..., bins].
std::pair<Tensor, Tensor> rfft(const Tensor& x, int fft_size);
// re_im [..., 2, bins] -> [..., fft_size] assuming conjugate symmetry.
Tensor irfft(const Tensor& re_im, int fft_size);

}  // namespace declip::ad
