#pragma once

#include <span>
#include <vector>

#include "declip/stft.hpp"
#include "declip/waveform.hpp"

namespace declip {

// 20*log10(||ref|| / ||ref - est||) in dB; +inf when est == ref exactly.
// A silent (all-zero) reference is an InvalidArgument.
double sdr(std::span<const double> ref, std::span<const double> est);

// sdr restricted to samples the mask marks clipped (either side).
// Throws NoClippedRegion if the mask has no clipped sample.
double sdr_clipped(std::span<const double> ref, std::span<const double> est,
                   const ClipMask& mask);

// ||A - B||_F / ||A||_F over magnitude spectrograms.
double spectral_convergence(std::span<const double> ref_mag,
                            std::span<const double> est_mag);
double spectral_convergence(const ComplexSpectrogram& ref,
                            const ComplexSpectrogram& est);

// Mean |log A - log B| with magnitudes floored at mag_floor before the log.
double log_magnitude_loss(std::span<const double> ref_mag,
                          std::span<const double> est_mag,
                          double mag_floor = 1e-7);
double log_magnitude_loss(const ComplexSpectrogram& ref,
                          const ComplexSpectrogram& est,
                          double mag_floor = 1e-7);

struct StftResolution {
  int fft_size;
  int hop;
  int win_length;  // 0 means fft_size

  StftConfig to_stft_config() const {
    return StftConfig{fft_size, win_length > 0 ? win_length : fft_size, hop,
                      true};
  }
};

struct MrstftConfig {
  std::vector<StftResolution> resolutions = {{512, 50, 512},
                                             {1024, 120, 1024},
                                             {2048, 240, 2048}};
  double lambda_wave = 100.0;  // weight on the time-domain mean absolute error
  double lambda_spec = 1.0;    // weight on the summed spectral terms
  double mag_floor = 1e-7;
};

struct ResolutionTerms {
  int fft_size;
  double sc;
  double mag;
};

struct LossBreakdown {
  double total = 0.0;
  double wave_l1 = 0.0;  // mean absolute sample error (unweighted)
  std::vector<ResolutionTerms> spectral;
};

// total = lambda_wave * wave_l1 + lambda_spec * sum_i (sc_i + mag_i).
LossBreakdown total_loss(std::span<const double> ref,
                         std::span<const double> est,
                         const MrstftConfig& cfg = {});

}  // namespace declip
