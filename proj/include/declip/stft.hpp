#pragma once

#include <span>
#include <vector>

namespace declip {

struct StftConfig {
  int fft_size = 512;
  int win_length = 512;  // <= fft_size; frames are zero-padded up to fft_size
  int hop = 128;
  bool center = true;  // reflect-pad win_length/2 on each side

  int bins() const { return fft_size / 2 + 1; }
  int frames_for(int n_samples) const;
  void validate() const;
};

// Periodic Hann window of the given length.
std::vector<double> hann_window(int length);

// Throws unless the squared-window overlap-add of (win, hop) has no
// near-zero interior point, i.e. the analysis is invertible.
void validate_nola(std::span<const double> window, int hop);

// One-sided complex spectrogram, bin-major: re/im are [bins x frames] with
// index f * frames + t. Forward transform is un-normalized.
struct ComplexSpectrogram {
  StftConfig config;
  int bins = 0;
  int frames = 0;
  std::vector<double> re;
  std::vector<double> im;

  double& real(int f, int t) { return re[static_cast<std::size_t>(f) * frames + t]; }
  double& imag(int f, int t) { return im[static_cast<std::size_t>(f) * frames + t]; }
  double real(int f, int t) const { return re[static_cast<std::size_t>(f) * frames + t]; }
  double imag(int f, int t) const { return im[static_cast<std::size_t>(f) * frames + t]; }
};

ComplexSpectrogram stft(std::span<const double> x, const StftConfig& cfg);

// Weighted overlap-add inverse with window-squared-sum normalization;
// exact (to rounding) for any config that passes validate_nola. out_len is
// the original signal length.
std::vector<double> istft(const ComplexSpectrogram& spec, int out_len);

// |X| with the same [bins x frames] layout.
std::vector<double> magnitude(const ComplexSpectrogram& spec);

}  // namespace declip
