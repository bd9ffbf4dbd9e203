#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace declip {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Per-sample reliability labels. Values are fixed by the mask sidecar format.
enum class SampleLabel : std::uint8_t {
  kReliable = 0,
  kClippedHigh = 1,
  kClippedLow = 2,
};

struct ClipMask {
  std::vector<SampleLabel> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t count(SampleLabel l) const {
    std::size_t n = 0;
    for (SampleLabel v : labels) n += (v == l);
    return n;
  }
  std::size_t clipped_count() const { return size() - count(SampleLabel::kReliable); }
  bool any_clipped() const {
    for (SampleLabel v : labels)
      if (v != SampleLabel::kReliable) return true;
    return false;
  }
};

struct ClipResult {
  Waveform clipped;
  ClipMask mask;
  double theta = 0.0;
};

}  // namespace declip
