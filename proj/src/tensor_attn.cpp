#include <algorithm>
#include <cmath>
#include <memory>

#include "declip/errors.hpp"
#include "declip/tensor.hpp"
#include "declip/tensor_detail.hpp"

namespace declip::ad {

using detail::check_defined;
using detail::check_same_shape;
using detail::make_op;
using detail::strides_of;

Tensor softmax(const Tensor& x, int axis) {
  check_defined(x, "softmax");
  const Shape& s = x.shape();
  const int rank = static_cast<int>(s.size());
  if (axis < 0 || axis >= rank)
    throw InvalidArgument("softmax: axis out of range for " + shape_str(s));
  const int D = s[axis];
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s[d];
  for (int d = axis + 1; d < rank; ++d) inner *= s[d];

  const auto xv = x.values();
  std::vector<double> v(xv.size());
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = o * D * inner + i;
      double mx = xv[base];
      for (int d = 1; d < D; ++d)
        mx = std::max(mx, xv[base + static_cast<std::int64_t>(d) * inner]);
      double sum = 0.0;
      for (int d = 0; d < D; ++d) {
        const double e = std::exp(xv[base + static_cast<std::int64_t>(d) * inner] - mx);
        v[base + static_cast<std::int64_t>(d) * inner] = e;
        sum += e;
      }
      const double inv = 1.0 / sum;
      for (int d = 0; d < D; ++d)
        v[base + static_cast<std::int64_t>(d) * inner] *= inv;
    }
  }
  return make_op("softmax", s, std::move(v), {x},
                 [outer, inner, D](Node& self) {
                   Node* p = self.parents[0].get();
                   p->ensure_grad();
                   for (std::int64_t o = 0; o < outer; ++o) {
                     for (std::int64_t i = 0; i < inner; ++i) {
                       const std::int64_t base = o * D * inner + i;
                       double dot = 0.0;
                       for (int d = 0; d < D; ++d) {
                         const std::int64_t k = base + static_cast<std::int64_t>(d) * inner;
                         dot += self.grad[k] * self.values[k];
                       }
                       for (int d = 0; d < D; ++d) {
                         const std::int64_t k = base + static_cast<std::int64_t>(d) * inner;
                         p->grad[k] += self.values[k] * (self.grad[k] - dot);
                       }
                     }
                   }
                 });
}

Tensor layer_stats_norm(const Tensor& x, std::vector<int> axes, double eps) {
  check_defined(x, "layer_stats_norm");
  const Shape& s = x.shape();
  const int rank = static_cast<int>(s.size());
  if (axes.empty())
    throw InvalidArgument("layer_stats_norm: no reduction axes");
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  std::vector<bool> is_axis(rank, false);
  std::int64_t m = 1;
  for (int a : axes) {
    if (a < 0 || a >= rank)
      throw InvalidArgument("layer_stats_norm: axis out of range for " +
                            shape_str(s));
    is_axis[a] = true;
    m *= s[a];
  }
  const std::int64_t n = x.size();
  const std::int64_t n_groups = n / m;

  // Per-element group index via strides over the non-reduced dims.
  const auto st = strides_of(s);
  std::vector<std::int64_t> gstride(rank, 0);
  std::int64_t acc = 1;
  for (int d = rank - 1; d >= 0; --d) {
    if (is_axis[d]) continue;
    gstride[d] = acc;
    acc *= s[d];
  }
  auto group_of = [&st, &gstride, rank](std::int64_t flat) {
    std::int64_t g = 0;
    for (int d = 0; d < rank; ++d) {
      const std::int64_t idx = flat / st[d];
      flat -= idx * st[d];
      g += idx * gstride[d];
    }
    return g;
  };

  const auto xv = x.values();
  std::vector<double> mean_g(n_groups, 0.0), var_g(n_groups, 0.0);
  for (std::int64_t i = 0; i < n; ++i) mean_g[group_of(i)] += xv[i];
  const double inv_m = 1.0 / static_cast<double>(m);
  for (double& v : mean_g) v *= inv_m;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = xv[i] - mean_g[group_of(i)];
    var_g[group_of(i)] += d * d;
  }
  auto inv_std = std::make_shared<std::vector<double>>(n_groups);
  for (std::int64_t g = 0; g < n_groups; ++g)
    (*inv_std)[g] = 1.0 / std::sqrt(var_g[g] * inv_m + eps);

  std::vector<double> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t g = group_of(i);
    v[i] = (xv[i] - mean_g[g]) * (*inv_std)[g];
  }
  return make_op(
      "layer_stats_norm", s, std::move(v), {x},
      [st, gstride, rank, n_groups, inv_m, inv_std](Node& self) {
        Node* p = self.parents[0].get();
        p->ensure_grad();
        auto group_of = [&st, &gstride, rank](std::int64_t flat) {
          std::int64_t g = 0;
          for (int d = 0; d < rank; ++d) {
            const std::int64_t idx = flat / st[d];
            flat -= idx * st[d];
            g += idx * gstride[d];
          }
          return g;
        };
        const std::int64_t n = static_cast<std::int64_t>(self.grad.size());
        std::vector<double> gmean(n_groups, 0.0), gydot(n_groups, 0.0);
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t g = group_of(i);
          gmean[g] += self.grad[i];
          gydot[g] += self.grad[i] * self.values[i];
        }
        for (std::int64_t g = 0; g < n_groups; ++g) {
          gmean[g] *= inv_m;
          gydot[g] *= inv_m;
        }
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t g = group_of(i);
          p->grad[i] += (*inv_std)[g] *
                        (self.grad[i] - gmean[g] - self.values[i] * gydot[g]);
        }
      });
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            int heads, AttentionCapture* capture) {
  check_defined(q, "multi_head_attention");
  check_defined(k, "multi_head_attention");
  check_defined(v, "multi_head_attention");
  check_same_shape(q, k, "multi_head_attention");
  check_same_shape(q, v, "multi_head_attention");
  if (q.shape().size() != 3)
    throw InvalidArgument("multi_head_attention: expected [B, L, C], got " +
                          shape_str(q.shape()));
  const int B = q.shape()[0], L = q.shape()[1], C = q.shape()[2];
  if (heads <= 0 || C % heads != 0)
    throw InvalidArgument("multi_head_attention: channels " + std::to_string(C) +
                          " not divisible by heads " + std::to_string(heads));
  const int dk = C / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dk));

  const double* qv = q.values().data();
  const double* kv = k.values().data();
  const double* vv = v.values().data();

  const bool record = grad_enabled() &&
                      (q.requires_grad() || k.requires_grad() || v.requires_grad());
  const bool store = record || capture != nullptr;

  // Softmax weights, [B, heads, L, L]; kept out of the graph to bound memory.
  std::shared_ptr<std::vector<double>> probs;
  if (store)
    probs = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(B) * heads * L * L);

  std::vector<double> out(static_cast<std::size_t>(B) * L * C, 0.0);
  std::vector<double> srow(L);
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < heads; ++h) {
      const std::size_t qoff = (static_cast<std::size_t>(b) * L) * C + h * dk;
      for (int i = 0; i < L; ++i) {
        const double* qi = qv + qoff + static_cast<std::size_t>(i) * C;
        double mx = -1e300;
        for (int j = 0; j < L; ++j) {
          const double* kj = kv + qoff + static_cast<std::size_t>(j) * C;
          double acc = 0.0;
          for (int d = 0; d < dk; ++d) acc += qi[d] * kj[d];
          srow[j] = acc * att_scale;
          mx = std::max(mx, srow[j]);
        }
        double sum = 0.0;
        for (int j = 0; j < L; ++j) {
          srow[j] = std::exp(srow[j] - mx);
          sum += srow[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < L; ++j) srow[j] *= inv;
        if (store)
          std::copy_n(srow.data(), L,
                      probs->data() +
                          ((static_cast<std::size_t>(b) * heads + h) * L + i) * L);
        double* oi = out.data() + qoff + static_cast<std::size_t>(i) * C;
        for (int j = 0; j < L; ++j) {
          const double a = srow[j];
          if (a == 0.0) continue;
          const double* vj = vv + qoff + static_cast<std::size_t>(j) * C;
          for (int d = 0; d < dk; ++d) oi[d] += a * vj[d];
        }
      }
    }
  }
  if (capture) {
    capture->shape = {B, heads, L, L};
    capture->weights = *probs;
  }

  return make_op(
      "multi_head_attention", q.shape(), std::move(out), {q, k, v},
      [B, L, C, heads, dk, att_scale, probs](Node& self) {
        Node* pq = self.parents[0].get();
        Node* pk = self.parents[1].get();
        Node* pv = self.parents[2].get();
        const bool nq = pq->requires_grad;
        const bool nk = pk->requires_grad;
        const bool nv = pv->requires_grad;
        if (nq) pq->ensure_grad();
        if (nk) pk->ensure_grad();
        if (nv) pv->ensure_grad();
        const double* qv = pq->values.data();
        const double* kv = pk->values.data();
        const double* vv = pv->values.data();
        const double* g = self.grad.data();
        std::vector<double> da(L);
        for (int b = 0; b < B; ++b) {
          for (int h = 0; h < heads; ++h) {
            const std::size_t off = (static_cast<std::size_t>(b) * L) * C + h * dk;
            const double* a_head =
                probs->data() + (static_cast<std::size_t>(b) * heads + h) * L * L;
            for (int i = 0; i < L; ++i) {
              const double* gi = g + off + static_cast<std::size_t>(i) * C;
              const double* arow = a_head + static_cast<std::size_t>(i) * L;
              // dV and dA from the context product.
              for (int j = 0; j < L; ++j) {
                const double* vj = vv + off + static_cast<std::size_t>(j) * C;
                const double a = arow[j];
                double acc = 0.0;
                for (int d = 0; d < dk; ++d) acc += gi[d] * vj[d];
                da[j] = acc;
                if (nv) {
                  double* gvj =
                      pv->grad.data() + off + static_cast<std::size_t>(j) * C;
                  for (int d = 0; d < dk; ++d) gvj[d] += a * gi[d];
                }
              }
              if (!nq && !nk) continue;
              double dot = 0.0;
              for (int j = 0; j < L; ++j) dot += da[j] * arow[j];
              const double* qi = qv + off + static_cast<std::size_t>(i) * C;
              double* gqi =
                  nq ? pq->grad.data() + off + static_cast<std::size_t>(i) * C
                     : nullptr;
              for (int j = 0; j < L; ++j) {
                const double ds = arow[j] * (da[j] - dot) * att_scale;
                if (ds == 0.0) continue;
                const double* kj = kv + off + static_cast<std::size_t>(j) * C;
                for (int d = 0; d < dk; ++d) {
                  if (nq) gqi[d] += ds * kj[d];
                }
                if (nk) {
                  double* gkj =
                      pk->grad.data() + off + static_cast<std::size_t>(j) * C;
                  for (int d = 0; d < dk; ++d) gkj[d] += ds * qi[d];
                }
              }
            }
          }
        }
      });
}

}  // namespace declip::ad
