#include "declip/aspade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "declip/errors.hpp"
#include "declip/fft.hpp"
#include "declip/stft.hpp"

namespace declip {
namespace {

// Keep the k largest one-sided DFT magnitudes of a Hermitian spectrum
// (interleaved complex, length n), ties broken toward lower bins, mirrors
// kept conjugate-consistent.
void hard_threshold(std::vector<double>& v, int n, int k) {
  const int half = n / 2;
  const int one_sided = half + 1;
  if (k >= one_sided) return;
  std::vector<int> bins(one_sided);
  std::iota(bins.begin(), bins.end(), 0);
  auto mag2 = [&v](int b) {
    const double re = v[2 * b], im = v[2 * b + 1];
    return re * re + im * im;
  };
  std::nth_element(bins.begin(), bins.begin() + k, bins.end(),
                   [&mag2](int a, int b) {
                     const double ma = mag2(a), mb = mag2(b);
                     if (ma != mb) return ma > mb;
                     return a < b;
                   });
  std::vector<char> keep(one_sided, 0);
  for (int i = 0; i < k; ++i) keep[bins[i]] = 1;
  for (int b = 0; b <= half; ++b) {
    if (!keep[b]) {
      v[2 * b] = 0.0;
      v[2 * b + 1] = 0.0;
      if (b != 0 && b != half) {
        v[2 * (n - b)] = 0.0;
        v[2 * (n - b) + 1] = 0.0;
      }
    } else if (b != 0 && b != half) {
      v[2 * (n - b)] = v[2 * b];
      v[2 * (n - b) + 1] = -v[2 * b + 1];
    }
  }
}

}  // namespace

void SpadeParams::validate() const {
  if (frame_len <= 0 || !fft::is_power_of_two(static_cast<std::size_t>(frame_len)))
    throw InvalidArgument("aspade: frame_len must be a positive power of two");
  if (hop <= 0 || hop > frame_len)
    throw InvalidArgument("aspade: need 0 < hop <= frame_len");
  if (max_iters <= 0) throw InvalidArgument("aspade: max_iters must be positive");
  if (sparsity_start < 1)
    throw InvalidArgument("aspade: sparsity_start must be >= 1");
  if (sparsity_step < 1)
    throw InvalidArgument("aspade: sparsity_step must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("aspade: tol must be positive");
}

SpadeResult declip_aspade(const Waveform& y, const ClipMask& mask,
                          const SpadeParams& params) {
  params.validate();
  const int n_samples = static_cast<int>(y.samples.size());
  if (n_samples == 0) throw InvalidArgument("aspade: empty input");
  if (mask.size() != static_cast<std::size_t>(n_samples))
    throw InvalidArgument("aspade: mask length " + std::to_string(mask.size()) +
                          " does not match signal length " +
                          std::to_string(n_samples));

  const int n = params.frame_len;
  const int hop = params.hop;
  const int frames =
      n_samples <= n ? 1 : (n_samples - n + hop - 1) / hop + 1;
  const int padded = (frames - 1) * hop + n;

  std::vector<double> ypad(padded, 0.0);
  std::copy(y.samples.begin(), y.samples.end(), ypad.begin());
  std::vector<SampleLabel> lpad(padded, SampleLabel::kReliable);
  std::copy(mask.labels.begin(), mask.labels.end(), lpad.begin());

  const std::vector<double> win = hann_window(n);
  std::vector<double> acc(padded, 0.0), norm(padded, 0.0);

  SpadeResult result;
  result.report.total_frames = frames;

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const int one_sided = n / 2 + 1;

  std::vector<double> x(n), best_x(n);
  std::vector<double> ax(2 * n), u(2 * n), z(2 * n), vbuf(2 * n);

  for (int t = 0; t < frames; ++t) {
    const int base = t * hop;
    bool any_clipped = false;
    for (int i = 0; i < n; ++i)
      if (lpad[base + i] != SampleLabel::kReliable) any_clipped = true;

    if (!any_clipped) {
      for (int i = 0; i < n; ++i) {
        acc[base + i] += win[i] * ypad[base + i];
        norm[base + i] += win[i];
      }
      continue;
    }
    result.report.processed_frames++;

    auto project = [&](std::vector<double>& frame) {
      for (int i = 0; i < n; ++i) {
        const double bound = ypad[base + i];
        switch (lpad[base + i]) {
          case SampleLabel::kReliable: frame[i] = bound; break;
          case SampleLabel::kClippedHigh: frame[i] = std::max(frame[i], bound); break;
          case SampleLabel::kClippedLow: frame[i] = std::min(frame[i], bound); break;
        }
      }
    };
    auto analyze = [&](const std::vector<double>& frame, std::vector<double>& out) {
      for (int i = 0; i < n; ++i) {
        out[2 * i] = frame[i] * inv_sqrt_n;
        out[2 * i + 1] = 0.0;
      }
      fft::forward_inplace(out.data(), static_cast<std::size_t>(n));
    };

    for (int i = 0; i < n; ++i) x[i] = ypad[base + i];
    std::fill(u.begin(), u.end(), 0.0);
    analyze(x, ax);
    int k = params.sparsity_start;
    double best_res = std::numeric_limits<double>::infinity();
    double first_res = 0.0;
    bool converged = false;

    for (int iter = 0; iter < params.max_iters; ++iter) {
      for (int i = 0; i < 2 * n; ++i) z[i] = ax[i] + u[i];
      hard_threshold(z, n, std::min(k, one_sided));

      // x-step: with a unitary analysis operator the constrained least
      // squares reduces to projecting the synthesized target onto the
      // clipping constraints.
      for (int i = 0; i < 2 * n; ++i) vbuf[i] = z[i] - u[i];
      fft::inverse_inplace(vbuf.data(), static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) x[i] = vbuf[2 * i] * sqrt_n;
      project(x);
      analyze(x, ax);

      double res_sq = 0.0;
      for (int i = 0; i < 2 * n; ++i) {
        const double d = ax[i] - z[i];
        res_sq += d * d;
      }
      const double res = std::sqrt(res_sq);
      if (iter == 0) first_res = res;
      if (res < best_res) {
        best_res = res;
        best_x = x;
      }
      if (res <= params.tol) {
        converged = true;
        break;
      }
      for (int i = 0; i < 2 * n; ++i) u[i] += ax[i] - z[i];
      k += params.sparsity_step;
    }

    if (!converged) result.report.non_converged_frames++;
    result.report.frame_residuals.emplace_back(first_res, best_res);
    for (int i = 0; i < n; ++i) {
      acc[base + i] += win[i] * best_x[i];
      norm[base + i] += win[i];
    }
  }

  result.output.sample_rate = y.sample_rate;
  result.output.samples.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    result.output.samples[i] =
        norm[i] > 1e-12 ? acc[i] / norm[i] : ypad[i];
    // Final global projection: overlap-add mixing must not violate the
    // per-sample constraints.
    switch (lpad[i]) {
      case SampleLabel::kReliable:
        result.output.samples[i] = ypad[i];
        break;
      case SampleLabel::kClippedHigh:
        result.output.samples[i] = std::max(result.output.samples[i], ypad[i]);
        break;
      case SampleLabel::kClippedLow:
        result.output.samples[i] = std::min(result.output.samples[i], ypad[i]);
        break;
    }
  }
  return result;
}

}  // namespace declip
