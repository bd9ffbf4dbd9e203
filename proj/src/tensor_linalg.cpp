#include <algorithm>
#include <cmath>

#include "declip/errors.hpp"
#include "declip/tensor.hpp"
#include "declip/tensor_detail.hpp"

namespace declip::ad {

using detail::check_defined;
using detail::make_op;

namespace {

// Valid output range [lo, hi) of `out` such that 0 <= out*stride - pad + k < limit.
void conv_out_bounds(int limit, int out_extent, int stride, int pad, int k,
                     int& lo, int& hi) {
  const int shift = pad - k;
  lo = shift <= 0 ? 0 : (shift + stride - 1) / stride;
  const int top = limit - 1 + shift;  // largest value of out*stride allowed
  hi = top < 0 ? 0 : std::min(out_extent, top / stride + 1);
  lo = std::min(lo, hi);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    throw InvalidArgument("matmul: incompatible shapes " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
  const int M = a.shape()[0], K = a.shape()[1], N = b.shape()[1];
  const double* av = a.values().data();
  const double* bv = b.values().data();
  std::vector<double> v(static_cast<std::size_t>(M) * N, 0.0);
  for (int i = 0; i < M; ++i) {
    double* c = v.data() + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const double aik = av[static_cast<std::size_t>(i) * K + k];
      const double* brow = bv + static_cast<std::size_t>(k) * N;
      for (int n = 0; n < N; ++n) c[n] += aik * brow[n];
    }
  }
  return make_op("matmul", {M, N}, std::move(v), {a, b}, [M, K, N](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    const double* g = self.grad.data();
    if (pa->requires_grad) {
      pa->ensure_grad();
      const double* bv = pb->values.data();
      for (int i = 0; i < M; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * N;
        double* gai = pa->grad.data() + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
          const double* brow = bv + static_cast<std::size_t>(k) * N;
          double acc = 0.0;
          for (int n = 0; n < N; ++n) acc += gi[n] * brow[n];
          gai[k] += acc;
        }
      }
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      const double* av = pa->values.data();
      for (int i = 0; i < M; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * N;
        for (int k = 0; k < K; ++k) {
          const double aik = av[static_cast<std::size_t>(i) * K + k];
          double* gbk = pb->grad.data() + static_cast<std::size_t>(k) * N;
          for (int n = 0; n < N; ++n) gbk[n] += aik * gi[n];
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_defined(x, "linear");
  check_defined(w, "linear");
  if (x.shape().empty() || w.shape().size() != 2)
    throw InvalidArgument("linear: need x [..., K] and w [N, K], got " +
                          shape_str(x.shape()) + " and " + shape_str(w.shape()));
  const int K = x.shape().back();
  const int N = w.shape()[0];
  if (w.shape()[1] != K)
    throw InvalidArgument("linear: feature mismatch " + shape_str(x.shape()) +
                          " vs " + shape_str(w.shape()));
  const bool has_bias = b.defined();
  if (has_bias && (b.shape().size() != 1 || b.shape()[0] != N))
    throw InvalidArgument("linear: bias shape " + shape_str(b.shape()) +
                          " does not match [" + std::to_string(N) + "]");
  const std::int64_t rows = x.size() / K;
  Shape out_shape = x.shape();
  out_shape.back() = N;

  const double* xv = x.values().data();
  const double* wv = w.values().data();
  const double* bv = has_bias ? b.values().data() : nullptr;
  std::vector<double> v(static_cast<std::size_t>(rows) * N);
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = xv + r * K;
    double* yr = v.data() + r * N;
    for (int n = 0; n < N; ++n) {
      const double* wn = wv + static_cast<std::size_t>(n) * K;
      double acc = bv ? bv[n] : 0.0;
      for (int k = 0; k < K; ++k) acc += xr[k] * wn[k];
      yr[n] = acc;
    }
  }
  std::vector<Tensor> parents = has_bias ? std::vector<Tensor>{x, w, b}
                                         : std::vector<Tensor>{x, w};
  return make_op("linear", std::move(out_shape), std::move(v), parents,
                 [rows, K, N, has_bias](Node& self) {
                   Node* px = self.parents[0].get();
                   Node* pw = self.parents[1].get();
                   Node* pb = has_bias ? self.parents[2].get() : nullptr;
                   const double* g = self.grad.data();
                   if (px->requires_grad) {
                     px->ensure_grad();
                     const double* wv = pw->values.data();
                     for (std::int64_t r = 0; r < rows; ++r) {
                       const double* gr = g + r * N;
                       double* gx = px->grad.data() + r * K;
                       for (int n = 0; n < N; ++n) {
                         const double gn = gr[n];
                         if (gn == 0.0) continue;
                         const double* wn = wv + static_cast<std::size_t>(n) * K;
                         for (int k = 0; k < K; ++k) gx[k] += gn * wn[k];
                       }
                     }
                   }
                   if (pw->requires_grad) {
                     pw->ensure_grad();
                     const double* xv = px->values.data();
                     for (std::int64_t r = 0; r < rows; ++r) {
                       const double* gr = g + r * N;
                       const double* xr = xv + r * K;
                       for (int n = 0; n < N; ++n) {
                         const double gn = gr[n];
                         if (gn == 0.0) continue;
                         double* gw = pw->grad.data() + static_cast<std::size_t>(n) * K;
                         for (int k = 0; k < K; ++k) gw[k] += gn * xr[k];
                       }
                     }
                   }
                   if (pb && pb->requires_grad) {
                     pb->ensure_grad();
                     for (std::int64_t r = 0; r < rows; ++r) {
                       const double* gr = g + r * N;
                       for (int n = 0; n < N; ++n) pb->grad[n] += gr[n];
                     }
                   }
                 });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding, int groups) {
  check_defined(x, "conv1d");
  check_defined(w, "conv1d");
  if (x.shape().size() != 2 || w.shape().size() != 3)
    throw InvalidArgument("conv1d: need x [Cin, L] and w [Cout, Cin/g, K], got " +
                          shape_str(x.shape()) + " and " + shape_str(w.shape()));
  const int cin = x.shape()[0], L = x.shape()[1];
  const int cout = w.shape()[0], cin_g = w.shape()[1], K = w.shape()[2];
  if (stride <= 0 || padding < 0 || groups <= 0)
    throw InvalidArgument("conv1d: bad stride/padding/groups");
  if (cin % groups != 0 || cout % groups != 0 || cin / groups != cin_g)
    throw InvalidArgument("conv1d: group mismatch, x " + shape_str(x.shape()) +
                          " w " + shape_str(w.shape()) + " groups " +
                          std::to_string(groups));
  const int Lout = (L + 2 * padding - K) / stride + 1;
  if (L + 2 * padding < K || Lout <= 0)
    throw InvalidArgument("conv1d: kernel longer than padded input");
  const bool has_bias = b.defined();
  if (has_bias && (b.shape().size() != 1 || b.shape()[0] != cout))
    throw InvalidArgument("conv1d: bias shape " + shape_str(b.shape()) +
                          " does not match output channels");

  const int cout_g = cout / groups;
  const double* xv = x.values().data();
  const double* wv = w.values().data();
  std::vector<double> v(static_cast<std::size_t>(cout) * Lout, 0.0);
  if (has_bias) {
    const double* bv = b.values().data();
    for (int co = 0; co < cout; ++co)
      std::fill_n(v.data() + static_cast<std::size_t>(co) * Lout, Lout, bv[co]);
  }
  for (int co = 0; co < cout; ++co) {
    const int g = co / cout_g;
    double* out = v.data() + static_cast<std::size_t>(co) * Lout;
    for (int ci = 0; ci < cin_g; ++ci) {
      const double* xin = xv + static_cast<std::size_t>(g * cin_g + ci) * L;
      const double* wk =
          wv + (static_cast<std::size_t>(co) * cin_g + ci) * K;
      for (int k = 0; k < K; ++k) {
        int lo, hi;
        conv_out_bounds(L, Lout, stride, padding, k, lo, hi);
        const double wkk = wk[k];
        if (wkk == 0.0) continue;
        const double* xoff = xin - padding + k;
        for (int t = lo; t < hi; ++t) out[t] += wkk * xoff[t * stride];
      }
    }
  }
  std::vector<Tensor> parents = has_bias ? std::vector<Tensor>{x, w, b}
                                         : std::vector<Tensor>{x, w};
  return make_op(
      "conv1d", {cout, Lout}, std::move(v), parents,
      [cin_g, cout_g, L, K, Lout, stride, padding, has_bias, cout](Node& self) {
        Node* px = self.parents[0].get();
        Node* pw = self.parents[1].get();
        Node* pb = has_bias ? self.parents[2].get() : nullptr;
        const double* g = self.grad.data();
        if (px->requires_grad) {
          px->ensure_grad();
          const double* wv = pw->values.data();
          for (int co = 0; co < cout; ++co) {
            const int gr = co / cout_g;
            const double* gout = g + static_cast<std::size_t>(co) * Lout;
            for (int ci = 0; ci < cin_g; ++ci) {
              double* gx = px->grad.data() +
                           static_cast<std::size_t>(gr * cin_g + ci) * L;
              const double* wk =
                  wv + (static_cast<std::size_t>(co) * cin_g + ci) * K;
              for (int k = 0; k < K; ++k) {
                int lo, hi;
                conv_out_bounds(L, Lout, stride, padding, k, lo, hi);
                const double wkk = wk[k];
                if (wkk == 0.0) continue;
                double* gxoff = gx - padding + k;
                for (int t = lo; t < hi; ++t) gxoff[t * stride] += wkk * gout[t];
              }
            }
          }
        }
        if (pw->requires_grad) {
          pw->ensure_grad();
          const double* xv = px->values.data();
          for (int co = 0; co < cout; ++co) {
            const int gr = co / cout_g;
            const double* gout = g + static_cast<std::size_t>(co) * Lout;
            for (int ci = 0; ci < cin_g; ++ci) {
              const double* xin =
                  xv + static_cast<std::size_t>(gr * cin_g + ci) * L;
              double* gw = pw->grad.data() +
                           (static_cast<std::size_t>(co) * cin_g + ci) * K;
              for (int k = 0; k < K; ++k) {
                int lo, hi;
                conv_out_bounds(L, Lout, stride, padding, k, lo, hi);
                const double* xoff = xin - padding + k;
                double acc = 0.0;
                for (int t = lo; t < hi; ++t) acc += gout[t] * xoff[t * stride];
                gw[k] += acc;
              }
            }
          }
        }
        if (pb && pb->requires_grad) {
          pb->ensure_grad();
          for (int co = 0; co < cout; ++co) {
            const double* gout = g + static_cast<std::size_t>(co) * Lout;
            double acc = 0.0;
            for (int t = 0; t < Lout; ++t) acc += gout[t];
            pb->grad[co] += acc;
          }
        }
      });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding, int groups) {
  check_defined(x, "conv2d");
  check_defined(w, "conv2d");
  if (x.shape().size() != 3 || w.shape().size() != 4)
    throw InvalidArgument("conv2d: need x [Cin, H, W] and w [Cout, Cin/g, kh, kw], got " +
                          shape_str(x.shape()) + " and " + shape_str(w.shape()));
  const int cin = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  const int cout = w.shape()[0], cin_g = w.shape()[1];
  const int kh = w.shape()[2], kw = w.shape()[3];
  if (stride <= 0 || padding < 0 || groups <= 0)
    throw InvalidArgument("conv2d: bad stride/padding/groups");
  if (cin % groups != 0 || cout % groups != 0 || cin / groups != cin_g)
    throw InvalidArgument("conv2d: group mismatch, x " + shape_str(x.shape()) +
                          " w " + shape_str(w.shape()) + " groups " +
                          std::to_string(groups));
  const int Hout = (H + 2 * padding - kh) / stride + 1;
  const int Wout = (W + 2 * padding - kw) / stride + 1;
  if (H + 2 * padding < kh || W + 2 * padding < kw || Hout <= 0 || Wout <= 0)
    throw InvalidArgument("conv2d: kernel larger than padded input");
  const bool has_bias = b.defined();
  if (has_bias && (b.shape().size() != 1 || b.shape()[0] != cout))
    throw InvalidArgument("conv2d: bias shape " + shape_str(b.shape()) +
                          " does not match output channels");

  const int cout_g = cout / groups;
  const double* xv = x.values().data();
  const double* wv = w.values().data();
  const std::size_t in_plane = static_cast<std::size_t>(H) * W;
  const std::size_t out_plane = static_cast<std::size_t>(Hout) * Wout;
  std::vector<double> v(static_cast<std::size_t>(cout) * out_plane, 0.0);
  if (has_bias) {
    const double* bv = b.values().data();
    for (int co = 0; co < cout; ++co)
      std::fill_n(v.data() + co * out_plane, out_plane, bv[co]);
  }
  for (int co = 0; co < cout; ++co) {
    const int g = co / cout_g;
    double* out = v.data() + co * out_plane;
    for (int ci = 0; ci < cin_g; ++ci) {
      const double* xin = xv + (g * cin_g + ci) * in_plane;
      const double* wk = wv + (static_cast<std::size_t>(co) * cin_g + ci) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        int ylo, yhi;
        conv_out_bounds(H, Hout, stride, padding, ky, ylo, yhi);
        for (int kx = 0; kx < kw; ++kx) {
          const double wkk = wk[ky * kw + kx];
          if (wkk == 0.0) continue;
          int xlo, xhi;
          conv_out_bounds(W, Wout, stride, padding, kx, xlo, xhi);
          for (int oy = ylo; oy < yhi; ++oy) {
            const double* xrow = xin + (oy * stride - padding + ky) * W - padding + kx;
            double* orow = out + static_cast<std::size_t>(oy) * Wout;
            for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wkk * xrow[ox * stride];
          }
        }
      }
    }
  }
  std::vector<Tensor> parents = has_bias ? std::vector<Tensor>{x, w, b}
                                         : std::vector<Tensor>{x, w};
  return make_op(
      "conv2d", {cout, Hout, Wout}, std::move(v), parents,
      [cin_g, cout_g, H, W, kh, kw, Hout, Wout, stride, padding, has_bias,
       cout, in_plane, out_plane](Node& self) {
        Node* px = self.parents[0].get();
        Node* pw = self.parents[1].get();
        Node* pb = has_bias ? self.parents[2].get() : nullptr;
        const double* g = self.grad.data();
        if (px->requires_grad) {
          px->ensure_grad();
          const double* wv = pw->values.data();
          for (int co = 0; co < cout; ++co) {
            const int gr = co / cout_g;
            const double* gout = g + co * out_plane;
            for (int ci = 0; ci < cin_g; ++ci) {
              double* gx = px->grad.data() + (gr * cin_g + ci) * in_plane;
              const double* wk =
                  wv + (static_cast<std::size_t>(co) * cin_g + ci) * kh * kw;
              for (int ky = 0; ky < kh; ++ky) {
                int ylo, yhi;
                conv_out_bounds(H, Hout, stride, padding, ky, ylo, yhi);
                for (int kx = 0; kx < kw; ++kx) {
                  const double wkk = wk[ky * kw + kx];
                  if (wkk == 0.0) continue;
                  int xlo, xhi;
                  conv_out_bounds(W, Wout, stride, padding, kx, xlo, xhi);
                  for (int oy = ylo; oy < yhi; ++oy) {
                    double* gxrow =
                        gx + (oy * stride - padding + ky) * W - padding + kx;
                    const double* grow = gout + static_cast<std::size_t>(oy) * Wout;
                    for (int ox = xlo; ox < xhi; ++ox)
                      gxrow[ox * stride] += wkk * grow[ox];
                  }
                }
              }
            }
          }
        }
        if (pw->requires_grad) {
          pw->ensure_grad();
          const double* xv = px->values.data();
          for (int co = 0; co < cout; ++co) {
            const int gr = co / cout_g;
            const double* gout = g + co * out_plane;
            for (int ci = 0; ci < cin_g; ++ci) {
              const double* xin = xv + (gr * cin_g + ci) * in_plane;
              double* gw = pw->grad.data() +
                           (static_cast<std::size_t>(co) * cin_g + ci) * kh * kw;
              for (int ky = 0; ky < kh; ++ky) {
                int ylo, yhi;
                conv_out_bounds(H, Hout, stride, padding, ky, ylo, yhi);
                for (int kx = 0; kx < kw; ++kx) {
                  int xlo, xhi;
                  conv_out_bounds(W, Wout, stride, padding, kx, xlo, xhi);
                  double acc = 0.0;
                  for (int oy = ylo; oy < yhi; ++oy) {
                    const double* xrow =
                        xin + (oy * stride - padding + ky) * W - padding + kx;
                    const double* grow = gout + static_cast<std::size_t>(oy) * Wout;
                    for (int ox = xlo; ox < xhi; ++ox)
                      acc += grow[ox] * xrow[ox * stride];
                  }
                  gw[ky * kw + kx] += acc;
                }
              }
            }
          }
        }
        if (pb && pb->requires_grad) {
          pb->ensure_grad();
          for (int co = 0; co < cout; ++co) {
            const double* gout = g + co * out_plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < out_plane; ++i) acc += gout[i];
            pb->grad[co] += acc;
          }
        }
      });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int padding) {
  check_defined(x, "conv_transpose2d");
  check_defined(w, "conv_transpose2d");
  if (x.shape().size() != 3 || w.shape().size() != 4)
    throw InvalidArgument(
        "conv_transpose2d: need x [Cin, H, W] and w [Cin, Cout, kh, kw], got " +
        shape_str(x.shape()) + " and " + shape_str(w.shape()));
  const int cin = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  if (w.shape()[0] != cin)
    throw InvalidArgument("conv_transpose2d: channel mismatch " +
                          shape_str(x.shape()) + " vs " + shape_str(w.shape()));
  const int cout = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  if (stride <= 0 || padding < 0)
    throw InvalidArgument("conv_transpose2d: bad stride/padding");
  const int Hout = (H - 1) * stride + kh - 2 * padding;
  const int Wout = (W - 1) * stride + kw - 2 * padding;
  if (Hout <= 0 || Wout <= 0)
    throw InvalidArgument("conv_transpose2d: empty output");
  const bool has_bias = b.defined();
  if (has_bias && (b.shape().size() != 1 || b.shape()[0] != cout))
    throw InvalidArgument("conv_transpose2d: bias shape " + shape_str(b.shape()) +
                          " does not match output channels");

  // Input position (ih, iw), kernel tap (ky, kx) scatter to
  // (ih*stride + ky - padding, iw*stride + kx - padding).
  const double* xv = x.values().data();
  const double* wv = w.values().data();
  const std::size_t in_plane = static_cast<std::size_t>(H) * W;
  const std::size_t out_plane = static_cast<std::size_t>(Hout) * Wout;
  std::vector<double> v(static_cast<std::size_t>(cout) * out_plane, 0.0);
  if (has_bias) {
    const double* bv = b.values().data();
    for (int co = 0; co < cout; ++co)
      std::fill_n(v.data() + co * out_plane, out_plane, bv[co]);
  }
  for (int ci = 0; ci < cin; ++ci) {
    const double* xin = xv + ci * in_plane;
    for (int co = 0; co < cout; ++co) {
      double* out = v.data() + co * out_plane;
      const double* wk =
          wv + (static_cast<std::size_t>(ci) * cout + co) * kh * kw;
      for (int ky = 0; ky < kh; ++ky) {
        int ylo, yhi;
        conv_out_bounds(Hout, H, stride, padding, ky, ylo, yhi);
        for (int kx = 0; kx < kw; ++kx) {
          const double wkk = wk[ky * kw + kx];
          if (wkk == 0.0) continue;
          int xlo, xhi;
          conv_out_bounds(Wout, W, stride, padding, kx, xlo, xhi);
          for (int iy = ylo; iy < yhi; ++iy) {
            const double* xrow = xin + static_cast<std::size_t>(iy) * W;
            double* orow = out + (iy * stride - padding + ky) * Wout - padding + kx;
            for (int ix = xlo; ix < xhi; ++ix) orow[ix * stride] += wkk * xrow[ix];
          }
        }
      }
    }
  }
  std::vector<Tensor> parents = has_bias ? std::vector<Tensor>{x, w, b}
                                         : std::vector<Tensor>{x, w};
  return make_op(
      "conv_transpose2d", {cout, Hout, Wout}, std::move(v), parents,
      [cin, cout, H, W, kh, kw, Hout, Wout, stride, padding, has_bias,
       in_plane, out_plane](Node& self) {
        Node* px = self.parents[0].get();
        Node* pw = self.parents[1].get();
        Node* pb = has_bias ? self.parents[2].get() : nullptr;
        const double* g = self.grad.data();
        if (px->requires_grad) {
          px->ensure_grad();
          const double* wv = pw->values.data();
          for (int ci = 0; ci < cin; ++ci) {
            double* gx = px->grad.data() + ci * in_plane;
            for (int co = 0; co < cout; ++co) {
              const double* gout = g + co * out_plane;
              const double* wk =
                  wv + (static_cast<std::size_t>(ci) * cout + co) * kh * kw;
              for (int ky = 0; ky < kh; ++ky) {
                int ylo, yhi;
                conv_out_bounds(Hout, H, stride, padding, ky, ylo, yhi);
                for (int kx = 0; kx < kw; ++kx) {
                  const double wkk = wk[ky * kw + kx];
                  if (wkk == 0.0) continue;
                  int xlo, xhi;
                  conv_out_bounds(Wout, W, stride, padding, kx, xlo, xhi);
                  for (int iy = ylo; iy < yhi; ++iy) {
                    double* gxrow = gx + static_cast<std::size_t>(iy) * W;
                    const double* grow =
                        gout + (iy * stride - padding + ky) * Wout - padding + kx;
                    for (int ix = xlo; ix < xhi; ++ix)
                      gxrow[ix] += wkk * grow[ix * stride];
                  }
                }
              }
            }
          }
        }
        if (pw->requires_grad) {
          pw->ensure_grad();
          const double* xv = px->values.data();
          for (int ci = 0; ci < cin; ++ci) {
            const double* xin = xv + ci * in_plane;
            for (int co = 0; co < cout; ++co) {
              const double* gout = g + co * out_plane;
              double* gw = pw->grad.data() +
                           (static_cast<std::size_t>(ci) * cout + co) * kh * kw;
              for (int ky = 0; ky < kh; ++ky) {
                int ylo, yhi;
                conv_out_bounds(Hout, H, stride, padding, ky, ylo, yhi);
                for (int kx = 0; kx < kw; ++kx) {
                  int xlo, xhi;
                  conv_out_bounds(Wout, W, stride, padding, kx, xlo, xhi);
                  double acc = 0.0;
                  for (int iy = ylo; iy < yhi; ++iy) {
                    const double* xrow = xin + static_cast<std::size_t>(iy) * W;
                    const double* grow =
                        gout + (iy * stride - padding + ky) * Wout - padding + kx;
                    for (int ix = xlo; ix < xhi; ++ix)
                      acc += xrow[ix] * grow[ix * stride];
                  }
                  gw[ky * kw + kx] += acc;
                }
              }
            }
          }
        }
        if (pb && pb->requires_grad) {
          pb->ensure_grad();
          for (int co = 0; co < cout; ++co) {
            const double* gout = g + co * out_plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < out_plane; ++i) acc += gout[i];
            pb->grad[co] += acc;
          }
        }
      });
}

}  // namespace declip::ad
