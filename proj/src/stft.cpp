#include "declip/stft.hpp"

#include <cmath>

#include "declip/errors.hpp"
#include "declip/fft.hpp"

namespace declip {

void StftConfig::validate() const {
  if (!fft::is_power_of_two(static_cast<std::size_t>(fft_size)))
    throw InvalidArgument("stft: fft_size must be a power of two");
  if (win_length <= 0 || win_length > fft_size)
    throw InvalidArgument("stft: need 0 < win_length <= fft_size");
  if (hop <= 0 || hop > win_length)
    throw InvalidArgument("stft: need 0 < hop <= win_length");
  if (win_length % 2 != 0)
    throw InvalidArgument("stft: win_length must be even");
}

int StftConfig::frames_for(int n_samples) const {
  if (n_samples <= 0) throw InvalidArgument("stft: empty signal");
  if (!center && n_samples < win_length)
    throw InvalidArgument("stft: signal shorter than the window");
  if (center) return n_samples / hop + 1;
  return (n_samples - win_length) / hop + 1;
}

std::vector<double> hann_window(int length) {
  if (length <= 0) throw InvalidArgument("hann_window: length must be positive");
  std::vector<double> w(length);
  for (int i = 0; i < length; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * i / length);
  return w;
}

void validate_nola(std::span<const double> window, int hop) {
  const int win = static_cast<int>(window.size());
  if (hop <= 0 || hop > win) throw InvalidArgument("validate_nola: bad hop");
  // Squared-window overlap-add is hop-periodic in steady state; check one period.
  double min_sum = -1.0;
  for (int phase = 0; phase < hop; ++phase) {
    double s = 0.0;
    for (int i = phase; i < win; i += hop) s += window[i] * window[i];
    if (min_sum < 0.0 || s < min_sum) min_sum = s;
  }
  if (min_sum <= 1e-10)
    throw InvalidArgument("validate_nola: window/hop overlap-add vanishes, "
                          "analysis is not invertible");
}

namespace {

// Signal extended by reflection (no repeated edge sample), the usual
// centered-analysis padding.
double sample_reflected(std::span<const double> x, long long idx) {
  const long long n = static_cast<long long>(x.size());
  if (n == 1) return x[0];
  while (idx < 0 || idx >= n) {
    if (idx < 0) idx = -idx;
    if (idx >= n) idx = 2 * (n - 1) - idx;
  }
  return x[static_cast<std::size_t>(idx)];
}

}  // namespace

ComplexSpectrogram stft(std::span<const double> x, const StftConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(x.size());
  const int frames = cfg.frames_for(n);
  const int bins = cfg.bins();
  const std::vector<double> win = hann_window(cfg.win_length);
  validate_nola(win, cfg.hop);

  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.bins = bins;
  spec.frames = frames;
  spec.re.assign(static_cast<std::size_t>(bins) * frames, 0.0);
  spec.im.assign(static_cast<std::size_t>(bins) * frames, 0.0);

  const int pad = cfg.center ? cfg.win_length / 2 : 0;
  std::vector<double> frame(cfg.fft_size);
  std::vector<double> re(bins), im(bins);
  for (int t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t) * cfg.hop - pad;
    for (int i = 0; i < cfg.win_length; ++i)
      frame[i] = win[i] * sample_reflected(x, start + i);
    for (int i = cfg.win_length; i < cfg.fft_size; ++i) frame[i] = 0.0;
    fft::rfft(frame.data(), static_cast<std::size_t>(cfg.fft_size), re.data(),
              im.data());
    for (int f = 0; f < bins; ++f) {
      spec.real(f, t) = re[f];
      spec.imag(f, t) = im[f];
    }
  }
  return spec;
}

std::vector<double> istft(const ComplexSpectrogram& spec, int out_len) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (out_len <= 0) throw InvalidArgument("istft: out_len must be positive");
  if (spec.bins != cfg.bins())
    throw InvalidArgument("istft: bin count does not match config");
  if (spec.frames != cfg.frames_for(out_len))
    throw InvalidArgument("istft: frame count does not match out_len");
  const std::vector<double> win = hann_window(cfg.win_length);

  const int pad = cfg.center ? cfg.win_length / 2 : 0;
  const long long acc_len = static_cast<long long>(spec.frames - 1) * cfg.hop +
                            cfg.win_length;
  std::vector<double> acc(acc_len, 0.0);
  std::vector<double> norm(acc_len, 0.0);
  std::vector<double> re(spec.bins), im(spec.bins);
  std::vector<double> frame(cfg.fft_size);
  for (int t = 0; t < spec.frames; ++t) {
    for (int f = 0; f < spec.bins; ++f) {
      re[f] = spec.real(f, t);
      im[f] = spec.imag(f, t);
    }
    fft::irfft(re.data(), im.data(), static_cast<std::size_t>(cfg.fft_size),
               frame.data());
    const long long base = static_cast<long long>(t) * cfg.hop;
    for (int i = 0; i < cfg.win_length; ++i) {
      acc[base + i] += win[i] * frame[i];
      norm[base + i] += win[i] * win[i];
    }
  }

  std::vector<double> out(out_len, 0.0);
  for (int i = 0; i < out_len; ++i) {
    const long long j = static_cast<long long>(i) + pad;
    if (j >= acc_len || norm[j] <= 1e-10)
      throw NumericalError("istft: window overlap-add normalization vanished "
                           "at sample " + std::to_string(i));
    out[i] = acc[j] / norm[j];
  }
  return out;
}

std::vector<double> magnitude(const ComplexSpectrogram& spec) {
  std::vector<double> m(spec.re.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = std::sqrt(spec.re[i] * spec.re[i] + spec.im[i] * spec.im[i]);
  return m;
}

}  // namespace declip
