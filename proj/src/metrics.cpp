#include "declip/metrics.hpp"

#include <cmath>
#include <limits>

#include "declip/errors.hpp"

namespace declip {

double sdr(std::span<const double> ref, std::span<const double> est) {
  if (ref.size() != est.size())
    throw InvalidArgument("sdr: signal lengths differ");
  if (ref.empty()) throw InvalidArgument("sdr: empty signals");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += ref[i] * ref[i];
    const double d = ref[i] - est[i];
    den += d * d;
  }
  if (num == 0.0) throw InvalidArgument("sdr: reference signal is silent");
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

double sdr_clipped(std::span<const double> ref, std::span<const double> est,
                   const ClipMask& mask) {
  if (ref.size() != est.size() || ref.size() != mask.size())
    throw InvalidArgument("sdr_clipped: lengths differ");
  double num = 0.0, den = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (mask.labels[i] == SampleLabel::kReliable) continue;
    ++n;
    num += ref[i] * ref[i];
    const double d = ref[i] - est[i];
    den += d * d;
  }
  if (n == 0)
    throw NoClippedRegion("sdr_clipped: mask marks no sample as clipped");
  if (num == 0.0)
    throw InvalidArgument("sdr_clipped: reference is silent on the clipped region");
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

double spectral_convergence(std::span<const double> ref_mag,
                            std::span<const double> est_mag) {
  if (ref_mag.size() != est_mag.size())
    throw InvalidArgument("spectral_convergence: sizes differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref_mag.size(); ++i) {
    const double d = ref_mag[i] - est_mag[i];
    num += d * d;
    den += ref_mag[i] * ref_mag[i];
  }
  if (den == 0.0)
    throw NumericalError("spectral_convergence: reference magnitude is all zero");
  return std::sqrt(num) / std::sqrt(den);
}

double spectral_convergence(const ComplexSpectrogram& ref,
                            const ComplexSpectrogram& est) {
  return spectral_convergence(magnitude(ref), magnitude(est));
}

double log_magnitude_loss(std::span<const double> ref_mag,
                          std::span<const double> est_mag, double mag_floor) {
  if (ref_mag.size() != est_mag.size())
    throw InvalidArgument("log_magnitude_loss: sizes differ");
  if (ref_mag.empty()) throw InvalidArgument("log_magnitude_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref_mag.size(); ++i) {
    const double a = std::log(std::max(ref_mag[i], mag_floor));
    const double b = std::log(std::max(est_mag[i], mag_floor));
    acc += std::abs(a - b);
  }
  return acc / static_cast<double>(ref_mag.size());
}

double log_magnitude_loss(const ComplexSpectrogram& ref,
                          const ComplexSpectrogram& est, double mag_floor) {
  return log_magnitude_loss(magnitude(ref), magnitude(est), mag_floor);
}

LossBreakdown total_loss(std::span<const double> ref,
                         std::span<const double> est,
                         const MrstftConfig& cfg) {
  if (ref.size() != est.size())
    throw InvalidArgument("total_loss: signal lengths differ");
  if (ref.empty()) throw InvalidArgument("total_loss: empty signals");
  LossBreakdown out;
  double l1 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) l1 += std::abs(ref[i] - est[i]);
  out.wave_l1 = l1 / static_cast<double>(ref.size());

  double spec_sum = 0.0;
  for (const StftResolution& res : cfg.resolutions) {
    const StftConfig sc = res.to_stft_config();
    const std::vector<double> rm = magnitude(stft(ref, sc));
    const std::vector<double> em = magnitude(stft(est, sc));
    ResolutionTerms terms;
    terms.fft_size = res.fft_size;
    terms.sc = spectral_convergence(rm, em);
    terms.mag = log_magnitude_loss(rm, em, cfg.mag_floor);
    spec_sum += terms.sc + terms.mag;
    out.spectral.push_back(terms);
  }
  out.total = cfg.lambda_wave * out.wave_l1 + cfg.lambda_spec * spec_sum;
  return out;
}

}  // namespace declip
