#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "declip/errors.hpp"
#include "declip/rng.hpp"
#include "declip/tensor.hpp"
#include "doctest.h"

using namespace declip::ad;

namespace {

// Central-finite-difference comparison against reverse-mode gradients.
//
// The op result is contracted to a scalar with fixed non-vanishing weights so
// every output coordinate influences the probe, then each input coordinate is
// perturbed independently.
struct FdHarness {
  std::function<Tensor(const std::vector<Tensor>&)> build;
  std::vector<Shape> shapes;
  std::vector<std::vector<double>> base;
  std::vector<double> probe_weights;

  static FdHarness make(std::function<Tensor(const std::vector<Tensor>&)> f,
                        std::vector<Shape> shapes, declip::Rng& rng,
                        double lo = -1.0, double hi = 1.0,
                        double keep_away_from_zero = 0.0) {
    FdHarness h;
    h.build = std::move(f);
    h.shapes = std::move(shapes);
    for (const Shape& s : h.shapes) {
      std::vector<double> vals(static_cast<std::size_t>(numel(s)));
      for (double& v : vals) {
        v = rng.uniform(lo, hi);
        if (keep_away_from_zero > 0.0) {
          const double sign = v < 0.0 ? -1.0 : 1.0;
          v = sign * (keep_away_from_zero +
                      std::abs(v) * (1.0 - keep_away_from_zero));
        }
      }
      h.base.push_back(std::move(vals));
    }
    return h;
  }

  double eval(const std::vector<std::vector<double>>& vals,
              std::vector<std::vector<double>>* grads) {
    std::unique_ptr<NoGradGuard> guard;
    if (!grads) guard = std::make_unique<NoGradGuard>();
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < shapes.size(); ++i)
      inputs.push_back(Tensor::variable(shapes[i], vals[i]));
    Tensor out = build(inputs);
    if (probe_weights.empty()) {
      declip::Rng wrng(977);
      probe_weights.resize(static_cast<std::size_t>(out.size()));
      for (double& w : probe_weights) w = wrng.uniform(0.5, 1.5);
    }
    Tensor w = Tensor::constant(out.node()->shape, probe_weights);
    Tensor s = sum(mul(out, w));
    const double value = s.item();
    if (grads) {
      s.backward();
      grads->clear();
      for (Tensor& in : inputs) {
        REQUIRE(in.has_grad());
        grads->emplace_back(in.grad().begin(), in.grad().end());
      }
    }
    return value;
  }

  void run(double tol = 1e-4, double step = 1e-6) {
    std::vector<std::vector<double>> grads;
    (void)eval(base, &grads);
    for (std::size_t t = 0; t < base.size(); ++t) {
      for (std::size_t i = 0; i < base[t].size(); ++i) {
        auto plus = base, minus = base;
        const double h = step * std::max(1.0, std::abs(base[t][i]));
        plus[t][i] += h;
        minus[t][i] -= h;
        const double fd = (eval(plus, nullptr) - eval(minus, nullptr)) / (2 * h);
        const double ad = grads[t][i];
        const double denom = std::max({std::abs(fd), std::abs(ad), 1e-4});
        INFO("input ", t, " coord ", i, " ad ", ad, " fd ", fd);
        CHECK(std::abs(ad - fd) / denom < tol);
      }
    }
  }
};

void check_op(const char* name,
              std::function<Tensor(const std::vector<Tensor>&)> f,
              std::vector<Shape> shapes, std::uint64_t seed,
              double lo = -1.0, double hi = 1.0, double away = 0.0,
              double tol = 1e-4) {
  INFO("op: ", name);
  declip::Rng rng(seed);
  auto h = FdHarness::make(std::move(f), std::move(shapes), rng, lo, hi, away);
  h.run(tol);
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("elementwise and scalar ops") {
  check_op("add", [](const std::vector<Tensor>& in) {
    return add(in[0], in[1]);
  }, {{2, 3}, {2, 3}}, 101);
  check_op("sub", [](const std::vector<Tensor>& in) {
    return sub(in[0], in[1]);
  }, {{2, 3}, {2, 3}}, 102);
  check_op("mul", [](const std::vector<Tensor>& in) {
    return mul(in[0], in[1]);
  }, {{2, 3}, {2, 3}}, 103);
  check_op("add_scalar", [](const std::vector<Tensor>& in) {
    return add_scalar(in[0], 0.7);
  }, {{5}}, 104);
  check_op("scale", [](const std::vector<Tensor>& in) {
    return scale(in[0], -1.3);
  }, {{5}}, 105);
  check_op("neg", [](const std::vector<Tensor>& in) {
    return neg(in[0]);
  }, {{4}}, 106);
  check_op("leaky_relu", [](const std::vector<Tensor>& in) {
    return leaky_relu(in[0], 0.1);
  }, {{3, 4}}, 107, -1.0, 1.0, 0.2);
  check_op("prelu", [](const std::vector<Tensor>& in) {
    return prelu(in[0], in[1]);
  }, {{3, 4}, {1}}, 108, -1.0, 1.0, 0.2);
  check_op("sqrt", [](const std::vector<Tensor>& in) {
    return declip::ad::sqrt(in[0]);
  }, {{6}}, 109, 0.3, 1.5);
  check_op("log", [](const std::vector<Tensor>& in) {
    return declip::ad::log(in[0]);
  }, {{6}}, 110, 0.3, 1.5);
  check_op("clamp_min", [](const std::vector<Tensor>& in) {
    return clamp_min(in[0], 0.0);
  }, {{3, 4}}, 111, -1.0, 1.0, 0.2);
  check_op("complex_magnitude", [](const std::vector<Tensor>& in) {
    return complex_magnitude(in[0], in[1]);
  }, {{2, 4}, {2, 4}}, 112, -1.0, 1.0, 0.3);
}

TEST_CASE("reductions") {
  check_op("sum", [](const std::vector<Tensor>& in) {
    return sum(in[0]);
  }, {{3, 4}}, 120);
  check_op("mean", [](const std::vector<Tensor>& in) {
    return mean(in[0]);
  }, {{3, 4}}, 121);
  check_op("abs_sum", [](const std::vector<Tensor>& in) {
    return abs_sum(in[0]);
  }, {{3, 4}}, 122, -1.0, 1.0, 0.2);
}

TEST_CASE("shape ops") {
  check_op("reshape", [](const std::vector<Tensor>& in) {
    return reshape(in[0], {3, 4});
  }, {{2, 6}}, 130);
  check_op("reshape_infer", [](const std::vector<Tensor>& in) {
    return reshape(in[0], {4, -1});
  }, {{2, 6}}, 131);
  check_op("transpose", [](const std::vector<Tensor>& in) {
    return transpose(in[0], 0, 2);
  }, {{2, 3, 4}}, 132);
  check_op("permute", [](const std::vector<Tensor>& in) {
    return permute(in[0], {2, 0, 1});
  }, {{2, 3, 4}}, 133);
  check_op("concat", [](const std::vector<Tensor>& in) {
    return concat({in[0], in[1], in[2]}, 1);
  }, {{2, 2}, {2, 3}, {2, 1}}, 134);
  check_op("slice", [](const std::vector<Tensor>& in) {
    return slice(in[0], 1, 1, 2);
  }, {{3, 4}}, 135);
  check_op("expand_repeat", [](const std::vector<Tensor>& in) {
    return expand(in[0], {4, 3});
  }, {{1, 3}}, 136);
  check_op("expand_new_axes", [](const std::vector<Tensor>& in) {
    return expand(in[0], {2, 4, 3});
  }, {{3}}, 137);
}

TEST_CASE("linear algebra") {
  check_op("matmul", [](const std::vector<Tensor>& in) {
    return matmul(in[0], in[1]);
  }, {{3, 4}, {4, 2}}, 140);
  check_op("linear", [](const std::vector<Tensor>& in) {
    return linear(in[0], in[1], in[2]);
  }, {{2, 5}, {3, 5}, {3}}, 141);
  check_op("linear_no_bias", [](const std::vector<Tensor>& in) {
    return linear(in[0], in[1], Tensor());
  }, {{2, 5}, {3, 5}}, 142);
  check_op("linear_batched", [](const std::vector<Tensor>& in) {
    return linear(in[0], in[1], in[2]);
  }, {{2, 3, 5}, {4, 5}, {4}}, 143);
}

TEST_CASE("convolutions") {
  check_op("conv1d", [](const std::vector<Tensor>& in) {
    return conv1d(in[0], in[1], in[2], 2, 1, 1);
  }, {{2, 8}, {3, 2, 3}, {3}}, 150);
  check_op("conv1d_grouped", [](const std::vector<Tensor>& in) {
    return conv1d(in[0], in[1], Tensor(), 1, 1, 2);
  }, {{4, 6}, {4, 2, 3}}, 151);
  check_op("conv2d", [](const std::vector<Tensor>& in) {
    return conv2d(in[0], in[1], in[2], 2, 1, 1);
  }, {{2, 5, 6}, {3, 2, 3, 3}, {3}}, 152);
  check_op("conv2d_grouped", [](const std::vector<Tensor>& in) {
    return conv2d(in[0], in[1], Tensor(), 1, 1, 2);
  }, {{4, 4, 5}, {2, 2, 3, 3}}, 153);
  check_op("conv_transpose2d", [](const std::vector<Tensor>& in) {
    return conv_transpose2d(in[0], in[1], in[2], 2, 1);
  }, {{2, 3, 4}, {2, 3, 2, 2}, {3}}, 154);
  check_op("conv_transpose2d_s1", [](const std::vector<Tensor>& in) {
    return conv_transpose2d(in[0], in[1], Tensor(), 1, 1);
  }, {{2, 3, 4}, {2, 2, 3, 3}}, 155);
}

TEST_CASE("normalization and attention") {
  check_op("softmax_rows", [](const std::vector<Tensor>& in) {
    return softmax(in[0], 1);
  }, {{2, 4}}, 160);
  check_op("softmax_cols", [](const std::vector<Tensor>& in) {
    return softmax(in[0], 0);
  }, {{3, 2}}, 161);
  check_op("layer_stats_norm", [](const std::vector<Tensor>& in) {
    return layer_stats_norm(in[0], {1});
  }, {{3, 5}}, 162);
  check_op("layer_stats_norm_multi", [](const std::vector<Tensor>& in) {
    return layer_stats_norm(in[0], {0, 2});
  }, {{2, 3, 2}}, 163);
  check_op("multi_head_attention", [](const std::vector<Tensor>& in) {
    return multi_head_attention(in[0], in[1], in[2], 2);
  }, {{2, 3, 4}, {2, 3, 4}, {2, 3, 4}}, 164);
}

TEST_CASE("signal ops") {
  check_op("pad_reflect", [](const std::vector<Tensor>& in) {
    return pad_reflect(in[0], 2, 3);
  }, {{7}}, 170);
  check_op("frame", [](const std::vector<Tensor>& in) {
    return frame(in[0], 4, 2);
  }, {{10}}, 171);
  check_op("overlap_add", [](const std::vector<Tensor>& in) {
    return overlap_add(in[0], 2, 8);
  }, {{3, 4}}, 172);
  check_op("rfft_pack", [](const std::vector<Tensor>& in) {
    return rfft_pack(in[0], 8);
  }, {{2, 6}}, 173);
  check_op("rfft_pair", [](const std::vector<Tensor>& in) {
    auto [re, im] = rfft(in[0], 8);
    return concat({re, im}, 0);
  }, {{2, 8}}, 174);
  check_op("irfft", [](const std::vector<Tensor>& in) {
    return irfft(in[0], 8);
  }, {{2, 2, 5}}, 175);
}

TEST_CASE("softmax outputs are normalized") {
  declip::Rng rng(180);
  std::vector<double> vals(12);
  for (double& v : vals) v = rng.uniform(-3.0, 3.0);
  Tensor x = Tensor::constant({3, 4}, vals);
  Tensor y = softmax(x, 1);
  auto v = y.values();
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += v[r * 4 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("attention capture matches softmax structure") {
  declip::Rng rng(181);
  auto draw = [&](Shape s) {
    std::vector<double> vals(static_cast<std::size_t>(numel(s)));
    for (double& v : vals) v = rng.uniform(-1.0, 1.0);
    return Tensor::constant(s, vals);
  };
  Tensor q = draw({2, 5, 6}), k = draw({2, 5, 6}), v = draw({2, 5, 6});
  AttentionCapture cap;
  (void)multi_head_attention(q, k, v, 3, &cap);
  REQUIRE(cap.shape == Shape({2, 3, 5, 5}));
  REQUIRE(cap.weights.size() == 2u * 3u * 5u * 5u);
  for (std::size_t row = 0; row < cap.weights.size() / 5; ++row) {
    double s = 0.0;
    for (int c = 0; c < 5; ++c) s += cap.weights[row * 5 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradients accumulate across backward calls") {
  Tensor x = Tensor::variable({3}, {1.0, 2.0, 3.0});
  Tensor s = sum(mul(x, x));
  s.backward();
  std::vector<double> once(x.grad().begin(), x.grad().end());
  Tensor s2 = sum(mul(x, x));
  s2.backward();
  for (int i = 0; i < 3; ++i)
    CHECK(x.grad()[i] == doctest::Approx(2.0 * once[i]));
  x.zero_grad();
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 0.0);
}

TEST_CASE("no-grad mode builds no graph") {
  Tensor a = Tensor::variable({2}, {1.0, 2.0});
  Tensor b = Tensor::variable({2}, {3.0, 4.0});
  {
    NoGradGuard guard;
    Tensor y = mul(a, b);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.parents().empty());
  }
  Tensor y = mul(a, b);
  CHECK(y.requires_grad());
  CHECK(y.parents().size() == 2);
}

TEST_CASE("detach stops gradient flow") {
  Tensor x = Tensor::variable({2}, {1.5, -2.0});
  Tensor y = sum(mul(x.detach(), x));
  y.backward();
  // d/dx (c * x) with c = detach(x): gradient is c, not 2x.
  CHECK(x.grad()[0] == doctest::Approx(1.5));
  CHECK(x.grad()[1] == doctest::Approx(-2.0));
}

TEST_CASE("constants receive no gradient") {
  Tensor c = Tensor::constant({2}, {5.0, 6.0});
  Tensor x = Tensor::variable({2}, {1.0, 2.0});
  Tensor s = sum(mul(c, x));
  s.backward();
  CHECK_FALSE(c.has_grad());
  CHECK(x.grad()[0] == doctest::Approx(5.0));
}

TEST_CASE("backward guards its preconditions") {
  Tensor x = Tensor::variable({3}, {1.0, 2.0, 3.0});
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(y.backward(), declip::InvalidArgument);
  Tensor c = Tensor::constant({1}, {2.0});
  CHECK_THROWS_AS(c.backward(), declip::InvalidArgument);
}

TEST_CASE("interior gradients reset between sweeps but leaves accumulate") {
  Tensor x = Tensor::variable({1}, {3.0});
  Tensor h = mul(x, x);       // shared interior node
  Tensor s1 = sum(h);
  Tensor s2 = sum(mul(h, h));
  s1.backward();              // dx = 2x = 6
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  s2.backward();              // adds d(x^4)/dx = 4 x^3 = 108
  CHECK(x.grad()[0] == doctest::Approx(6.0 + 108.0));
}

}  // TEST_SUITE
