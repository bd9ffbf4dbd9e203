#include <algorithm>
#include <cmath>

#include "declip/errors.hpp"
#include "declip/fft.hpp"
#include "declip/tensor.hpp"
#include "declip/tensor_detail.hpp"

namespace declip::ad {

using detail::check_defined;
using detail::make_op;

namespace {

// Mirror index without edge repetition, valid for pad < length.
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (i < 0) i = -i;
  if (i >= n) i = 2 * (n - 1) - i;
  return i;
}

}  // namespace

Tensor pad_reflect(const Tensor& x, int left, int right) {
  check_defined(x, "pad_reflect");
  if (x.shape().size() != 1)
    throw InvalidArgument("pad_reflect: expected 1-D input, got " +
                          shape_str(x.shape()));
  const int L = x.shape()[0];
  if (left < 0 || right < 0 || left >= L || right >= L)
    throw InvalidArgument("pad_reflect: pad must be in [0, length) for " +
                          shape_str(x.shape()));
  const int out_len = L + left + right;
  const auto xv = x.values();
  std::vector<double> v(static_cast<std::size_t>(out_len));
  for (int i = 0; i < out_len; ++i)
    v[i] = xv[reflect_index(static_cast<std::int64_t>(i) - left, L)];
  return make_op("pad_reflect", {out_len}, std::move(v), {x},
                 [left, out_len, L](Node& self) {
                   Node* p = self.parents[0].get();
                   p->ensure_grad();
                   for (int i = 0; i < out_len; ++i)
                     p->grad[reflect_index(static_cast<std::int64_t>(i) - left, L)] +=
                         self.grad[i];
                 });
}

Tensor frame(const Tensor& x, int win, int hop) {
  check_defined(x, "frame");
  if (x.shape().size() != 1)
    throw InvalidArgument("frame: expected 1-D input, got " +
                          shape_str(x.shape()));
  const int L = x.shape()[0];
  if (win <= 0 || hop <= 0 || win > L)
    throw InvalidArgument("frame: need 0 < hop, 0 < win <= length");
  const int T = (L - win) / hop + 1;
  const auto xv = x.values();
  std::vector<double> v(static_cast<std::size_t>(T) * win);
  for (int t = 0; t < T; ++t)
    std::copy_n(xv.data() + static_cast<std::size_t>(t) * hop, win,
                v.data() + static_cast<std::size_t>(t) * win);
  return make_op("frame", {T, win}, std::move(v), {x}, [T, win, hop](Node& self) {
    Node* p = self.parents[0].get();
    p->ensure_grad();
    for (int t = 0; t < T; ++t) {
      const double* g = self.grad.data() + static_cast<std::size_t>(t) * win;
      double* gx = p->grad.data() + static_cast<std::size_t>(t) * hop;
      for (int i = 0; i < win; ++i) gx[i] += g[i];
    }
  });
}

Tensor overlap_add(const Tensor& frames, int hop, int out_len) {
  check_defined(frames, "overlap_add");
  if (frames.shape().size() != 2)
    throw InvalidArgument("overlap_add: expected [T, win], got " +
                          shape_str(frames.shape()));
  const int T = frames.shape()[0], win = frames.shape()[1];
  if (hop <= 0 || hop > win)
    throw InvalidArgument("overlap_add: need 0 < hop <= win");
  const int need = (T - 1) * hop + win;
  if (out_len != need)
    throw InvalidArgument("overlap_add: out_len " + std::to_string(out_len) +
                          " does not match frames, expected " +
                          std::to_string(need));
  const auto fv = frames.values();
  std::vector<double> v(static_cast<std::size_t>(out_len), 0.0);
  for (int t = 0; t < T; ++t) {
    const double* fr = fv.data() + static_cast<std::size_t>(t) * win;
    double* out = v.data() + static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) out[i] += fr[i];
  }
  return make_op("overlap_add", {out_len}, std::move(v), {frames},
                 [T, win, hop](Node& self) {
                   Node* p = self.parents[0].get();
                   p->ensure_grad();
                   for (int t = 0; t < T; ++t) {
                     double* gf = p->grad.data() + static_cast<std::size_t>(t) * win;
                     const double* g = self.grad.data() + static_cast<std::size_t>(t) * hop;
                     for (int i = 0; i < win; ++i) gf[i] += g[i];
                   }
                 });
}

Tensor rfft_pack(const Tensor& x, int fft_size) {
  check_defined(x, "rfft_pack");
  if (x.shape().empty())
    throw InvalidArgument("rfft_pack: scalar input");
  const int n = x.shape().back();
  if (!fft::is_power_of_two(static_cast<std::size_t>(fft_size)))
    throw InvalidArgument("rfft_pack: fft_size must be a power of two");
  if (n > fft_size)
    throw InvalidArgument("rfft_pack: input length exceeds fft_size");
  const int bins = fft_size / 2 + 1;
  const std::int64_t rows = x.size() / n;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  out_shape.push_back(2);
  out_shape.push_back(bins);

  const auto xv = x.values();
  std::vector<double> v(static_cast<std::size_t>(rows) * 2 * bins);
  std::vector<double> buf(fft_size, 0.0), re(bins), im(bins);
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy_n(xv.data() + r * n, n, buf.data());
    std::fill(buf.begin() + n, buf.end(), 0.0);
    fft::rfft(buf.data(), static_cast<std::size_t>(fft_size), re.data(), im.data());
    std::copy_n(re.data(), bins, v.data() + r * 2 * bins);
    std::copy_n(im.data(), bins, v.data() + (r * 2 + 1) * bins);
  }
  return make_op(
      "rfft", std::move(out_shape), std::move(v), {x},
      [rows, n, fft_size, bins](Node& self) {
        Node* p = self.parents[0].get();
        p->ensure_grad();
        // d/dx of (Re, Im) at one-sided bins: real part of the unscaled
        // inverse transform of the cotangents zero-extended above Nyquist.
        std::vector<double> buf(2 * static_cast<std::size_t>(fft_size));
        for (std::int64_t r = 0; r < rows; ++r) {
          std::fill(buf.begin(), buf.end(), 0.0);
          const double* gre = self.grad.data() + r * 2 * bins;
          const double* gim = gre + bins;
          for (int k = 0; k < bins; ++k) {
            buf[2 * k] = gre[k];
            buf[2 * k + 1] = gim[k];
          }
          fft::inverse_inplace(buf.data(), static_cast<std::size_t>(fft_size));
          double* gx = p->grad.data() + r * n;
          for (int j = 0; j < n; ++j)
            gx[j] += static_cast<double>(fft_size) * buf[2 * j];
        }
      });
}

std::pair<Tensor, Tensor> rfft(const Tensor& x, int fft_size) {
  Tensor packed = rfft_pack(x, fft_size);
  const int axis = static_cast<int>(packed.shape().size()) - 2;
  Tensor re = slice(packed, axis, 0, 1);
  Tensor im = slice(packed, axis, 1, 1);
  // Drop the singleton packing axis.
  Shape s(packed.shape());
  s.erase(s.begin() + axis);
  return {reshape(re, s), reshape(im, Shape(s))};
}

Tensor irfft(const Tensor& re_im, int fft_size) {
  check_defined(re_im, "irfft");
  const Shape& in = re_im.shape();
  if (in.size() < 2)
    throw InvalidArgument("irfft: expected [..., 2, bins], got " + shape_str(in));
  const int bins = in.back();
  const int two = in[in.size() - 2];
  if (!fft::is_power_of_two(static_cast<std::size_t>(fft_size)))
    throw InvalidArgument("irfft: fft_size must be a power of two");
  if (two != 2 || bins != fft_size / 2 + 1)
    throw InvalidArgument("irfft: shape " + shape_str(in) +
                          " does not match fft_size " + std::to_string(fft_size));
  const std::int64_t rows = re_im.size() / (2 * static_cast<std::int64_t>(bins));
  Shape out_shape(in.begin(), in.end() - 2);
  out_shape.push_back(fft_size);

  const auto sv = re_im.values();
  std::vector<double> v(static_cast<std::size_t>(rows) * fft_size);
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* re = sv.data() + r * 2 * bins;
    const double* im = re + bins;
    fft::irfft(re, im, static_cast<std::size_t>(fft_size), v.data() + r * fft_size);
  }
  return make_op(
      "irfft", std::move(out_shape), std::move(v), {re_im},
      [rows, fft_size, bins](Node& self) {
        Node* p = self.parents[0].get();
        p->ensure_grad();
        // Cotangent of the one-sided spectrum: forward transform of the
        // output cotangent, weighted 2/n on interior bins and 1/n at DC and
        // Nyquist; imaginary parts at DC/Nyquist never reach the output.
        std::vector<double> buf(2 * static_cast<std::size_t>(fft_size));
        const double inv_n = 1.0 / static_cast<double>(fft_size);
        for (std::int64_t r = 0; r < rows; ++r) {
          const double* gx = self.grad.data() + r * fft_size;
          for (int j = 0; j < fft_size; ++j) {
            buf[2 * j] = gx[j];
            buf[2 * j + 1] = 0.0;
          }
          fft::forward_inplace(buf.data(), static_cast<std::size_t>(fft_size));
          double* gre = p->grad.data() + r * 2 * bins;
          double* gim = gre + bins;
          for (int k = 0; k < bins; ++k) {
            const bool edge = (k == 0 || k == fft_size / 2);
            const double c = edge ? inv_n : 2.0 * inv_n;
            gre[k] += c * buf[2 * k];
            if (!edge) gim[k] += c * buf[2 * k + 1];
          }
        }
      });
}

}  // namespace declip::ad
