#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "declip/rng.hpp"
#include "declip/waveform.hpp"

namespace declip {

struct CorpusSpec {
  int n_train = 120;
  int n_val = 40;
  int n_test = 40;
  double seconds_per_clip = 1.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;

  void validate() const;
};

// One voiced synthetic clip: a pitch- and amplitude-modulated harmonic stack
// with formant shaping plus band-limited noise, peak-normalized into
// [0.5, 1.0].
Waveform synth_clip(int n_samples, int sample_rate, Rng& rng);

struct Corpus {
  std::vector<Waveform> train, val, test;
};

Corpus make_corpus(const CorpusSpec& spec);

// Layout: <dir>/{train,val,test}/NNNN.wav (float32).
void write_corpus(const Corpus& corpus, const std::string& dir);
// Ingest hook for pre-existing WAV folders in the same layout.
Corpus load_corpus(const std::string& dir);

struct ClipPair {
  Waveform clipped;
  Waveform clean;
  ClipMask mask;
  double theta = 0.0;
};

// theta ~ Uniform(theta_lo, theta_hi) on a linear scale; thresholds are
// absolute, so the input should be peak-normalized (peak <= 1) first.
ClipPair sample_clip_pair(const Waveform& x, Rng& rng, double theta_lo = 0.01,
                          double theta_hi = 0.125);

}  // namespace declip
