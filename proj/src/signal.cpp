#include "declip/signal.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "declip/errors.hpp"
#include "declip/metrics.hpp"

namespace declip {
namespace {

double peak_abs(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

double clip_sdr(const Waveform& x, double theta) {
  double num = 0.0, den = 0.0;
  for (double v : x.samples) {
    num += v * v;
    const double c = v > theta ? theta : (v < -theta ? -theta : v);
    den += (v - c) * (v - c);
  }
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

}  // namespace

ClipResult clip(const Waveform& x, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw InvalidArgument("clip: theta must be finite and positive");
  ClipResult r;
  r.theta = theta;
  r.clipped.sample_rate = x.sample_rate;
  r.clipped.samples.resize(x.samples.size());
  r.mask.labels.resize(x.samples.size());
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    const double v = x.samples[i];
    if (v > theta) {
      r.clipped.samples[i] = theta;
      r.mask.labels[i] = SampleLabel::kClippedHigh;
    } else if (v < -theta) {
      r.clipped.samples[i] = -theta;
      r.mask.labels[i] = SampleLabel::kClippedLow;
    } else {
      r.clipped.samples[i] = v;
      r.mask.labels[i] = SampleLabel::kReliable;
    }
  }
  return r;
}

double min_achievable_sdr(const Waveform& x) {
  const double peak = peak_abs(x.samples);
  if (peak == 0.0) throw InvalidArgument("min_achievable_sdr: all-zero signal");
  return clip_sdr(x, peak * 1e-9);
}

double find_threshold(const Waveform& x, double target_sdr_db, double tol_db,
                      int max_iters) {
  if (std::isnan(target_sdr_db))
    throw InvalidArgument("find_threshold: target is NaN");
  if (!(tol_db > 0.0)) throw InvalidArgument("find_threshold: tol must be > 0");
  const double peak = peak_abs(x.samples);
  if (peak == 0.0)
    throw InvalidArgument("find_threshold: signal is all zero, no threshold exists");
  if (std::isinf(target_sdr_db)) {
    if (target_sdr_db > 0.0) return peak;  // identity clip
    throw UnreachableTarget("find_threshold: target -inf dB is unreachable");
  }

  double lo = peak * 1e-9;
  double hi = peak;
  const double sdr_lo = clip_sdr(x, lo);
  if (target_sdr_db <= sdr_lo) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "find_threshold: target %.4f dB unreachable; achievable range "
                  "is (%.4f dB, inf]",
                  target_sdr_db, sdr_lo);
    throw UnreachableTarget(buf);
  }

  for (int it = 0; it < max_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = clip_sdr(x, mid);
    if (std::abs(s - target_sdr_db) <= tol_db) return mid;
    if (s < target_sdr_db)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericalError("find_threshold: bisection did not reach tolerance within " +
                       std::to_string(max_iters) + " iterations");
}

ClipMask mask_from_clipped(std::span<const double> y, double theta, double eps) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw InvalidArgument("mask_from_clipped: theta must be finite and positive");
  if (eps < 0.0) throw InvalidArgument("mask_from_clipped: eps must be >= 0");
  ClipMask m;
  m.labels.resize(y.size());
  const double bound = theta - eps;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= bound)
      m.labels[i] = SampleLabel::kClippedHigh;
    else if (y[i] <= -bound)
      m.labels[i] = SampleLabel::kClippedLow;
    else
      m.labels[i] = SampleLabel::kReliable;
  }
  return m;
}

}  // namespace declip
