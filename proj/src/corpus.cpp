#include "declip/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "declip/errors.hpp"
#include "declip/signal.hpp"
#include "declip/wav_io.hpp"

namespace declip {

namespace fs = std::filesystem;

void CorpusSpec::validate() const {
  if (n_train <= 0 || n_val <= 0 || n_test <= 0)
    throw InvalidArgument("corpus: split counts must be positive");
  if (seconds_per_clip <= 0.0)
    throw InvalidArgument("corpus: seconds_per_clip must be positive");
  if (sample_rate <= 0)
    throw InvalidArgument("corpus: sample_rate must be positive");
}

Waveform synth_clip(int n_samples, int sample_rate, Rng& rng) {
  if (n_samples <= 0 || sample_rate <= 0)
    throw InvalidArgument("synth_clip: bad length or rate");
  const double dt = 1.0 / sample_rate;
  const double nyquist = 0.5 * sample_rate;

  // Pitch track: base f0 with vibrato and slow drift.
  const double f0 = rng.uniform(120.0, 250.0);
  const double vib_rate = rng.uniform(4.0, 7.0);
  const double vib_depth = rng.uniform(0.01, 0.04);
  const double vib_phase = rng.uniform(0.0, 6.283185307179586);
  const double drift_rate = rng.uniform(0.3, 1.0);
  const double drift_depth = rng.uniform(0.02, 0.06);
  const double drift_phase = rng.uniform(0.0, 6.283185307179586);

  // Harmonic amplitudes: 1/k^p rolloff shaped by two or three formant bumps.
  const double rolloff = rng.uniform(0.7, 1.2);
  const int n_formants = static_cast<int>(rng.uniform_int(2, 3));
  double fc[3] = {rng.uniform(300.0, 900.0), rng.uniform(900.0, 2200.0),
                  rng.uniform(2200.0, 3500.0)};
  double bw[3] = {rng.uniform(80.0, 200.0), rng.uniform(120.0, 300.0),
                  rng.uniform(200.0, 500.0)};

  const double f0_max = f0 * (1.0 + vib_depth + drift_depth);
  const int n_harm =
      std::max(1, std::min(40, static_cast<int>(0.9 * nyquist / f0_max)));
  std::vector<double> amp(n_harm), phase(n_harm);
  for (int k = 0; k < n_harm; ++k) {
    const double fk = (k + 1) * f0;
    double formant_gain = 0.12;
    for (int j = 0; j < n_formants; ++j) {
      const double d = (fk - fc[j]) / bw[j];
      formant_gain += std::exp(-d * d);
    }
    amp[k] = formant_gain / std::pow(k + 1.0, rolloff);
    phase[k] = rng.uniform(0.0, 6.283185307179586);
  }

  // Syllabic envelope: raised-cosine pulses dipping close to silence.
  const double syl_rate = rng.uniform(2.5, 5.0);
  const double syl_phase = rng.uniform(0.0, 6.283185307179586);
  const double syl_shape = rng.uniform(1.0, 3.0);
  const double env_floor = rng.uniform(0.03, 0.08);

  // Inter-phrase pauses: a slow gate holds the envelope near the noise floor
  // for a fifth to a third of the time, like gaps between words.
  const double pause_rate = rng.uniform(0.6, 1.2);
  const double pause_phase = rng.uniform(0.0, 6.283185307179586);
  const double pause_lo = rng.uniform(0.12, 0.25);
  const double pause_hi = pause_lo + 0.25;
  const double pause_floor = rng.uniform(0.02, 0.05);

  // Stress contour: phrases swell and recede, leaving quiet voiced stretches.
  const double stress_rate = rng.uniform(0.4, 0.9);
  const double stress_phase = rng.uniform(0.0, 6.283185307179586);
  const double stress_floor = rng.uniform(0.15, 0.4);

  const double noise_gain = rng.uniform(0.015, 0.045);  // vs unit voiced part

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<std::size_t>(n_samples), 0.0);

  double carrier_phase = 0.0;
  double lp = 0.0, lp_prev = 0.0;  // band-limited noise state
  for (int i = 0; i < n_samples; ++i) {
    const double t = i * dt;
    const double f_inst =
        f0 * (1.0 + vib_depth * std::sin(6.283185307179586 * vib_rate * t + vib_phase) +
              drift_depth * std::sin(6.283185307179586 * drift_rate * t + drift_phase));
    carrier_phase += 6.283185307179586 * f_inst * dt;

    double voiced = 0.0;
    for (int k = 0; k < n_harm; ++k)
      voiced += amp[k] * std::sin((k + 1) * carrier_phase + phase[k]);

    const double pulse =
        0.5 - 0.5 * std::cos(6.283185307179586 * syl_rate * t + syl_phase);
    double env = env_floor + (1.0 - env_floor) * std::pow(pulse, syl_shape);

    const double pg =
        0.5 - 0.5 * std::cos(6.283185307179586 * pause_rate * t + pause_phase);
    double gate = (pg - pause_lo) / (pause_hi - pause_lo);
    gate = std::clamp(gate, 0.0, 1.0);
    gate = gate * gate * (3.0 - 2.0 * gate);
    env *= pause_floor + (1.0 - pause_floor) * gate;

    const double sw =
        0.5 - 0.5 * std::cos(6.283185307179586 * stress_rate * t + stress_phase);
    env *= stress_floor + (1.0 - stress_floor) * sw;

    // One-pole lowpass of white noise, first difference for a band shape.
    const double white = rng.uniform(-1.0, 1.0);
    lp_prev = lp;
    lp += 0.25 * (white - lp);
    const double band = lp - 0.5 * lp_prev;

    w.samples[i] = env * (voiced + noise_gain * band);
  }

  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) throw NumericalError("synth_clip: degenerate silent clip");
  const double target_peak = rng.uniform(0.35, 1.0);
  const double g = target_peak / peak;
  for (double& v : w.samples) v *= g;
  return w;
}

Corpus make_corpus(const CorpusSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(spec.seconds_per_clip * spec.sample_rate);
  Rng root(spec.seed);
  Corpus c;
  auto fill = [&](std::vector<Waveform>& split, int count, std::uint64_t tag) {
    split.reserve(count);
    for (int i = 0; i < count; ++i) {
      Rng r = root.fork((tag << 32) | static_cast<std::uint64_t>(i));
      split.push_back(synth_clip(n, spec.sample_rate, r));
    }
  };
  fill(c.train, spec.n_train, 1);
  fill(c.val, spec.n_val, 2);
  fill(c.test, spec.n_test, 3);
  return c;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  const std::pair<const char*, const std::vector<Waveform>*> splits[] = {
      {"train", &corpus.train}, {"val", &corpus.val}, {"test", &corpus.test}};
  for (const auto& [name, split] : splits) {
    const fs::path sub = fs::path(dir) / name;
    std::error_code ec;
    fs::create_directories(sub, ec);
    if (ec) throw DataError("cannot create directory: " + sub.string());
    for (std::size_t i = 0; i < split->size(); ++i) {
      char leaf[16];
      std::snprintf(leaf, sizeof leaf, "%04zu.wav", i);
      write_wav((sub / leaf).string(), (*split)[i], WavEncoding::kFloat32);
    }
  }
}

Corpus load_corpus(const std::string& dir) {
  Corpus c;
  const std::pair<const char*, std::vector<Waveform>*> splits[] = {
      {"train", &c.train}, {"val", &c.val}, {"test", &c.test}};
  for (const auto& [name, split] : splits) {
    const fs::path sub = fs::path(dir) / name;
    if (!fs::is_directory(sub))
      throw DataError("corpus split missing: " + sub.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(sub))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw DataError("corpus split empty: " + sub.string());
    split->reserve(files.size());
    for (const auto& f : files) split->push_back(read_wav(f.string()));
  }
  return c;
}

ClipPair sample_clip_pair(const Waveform& x, Rng& rng, double theta_lo,
                          double theta_hi) {
  if (!(theta_lo > 0.0) || !(theta_hi > theta_lo))
    throw InvalidArgument("sample_clip_pair: theta range must be positive and ordered");
  ClipPair p;
  p.theta = rng.uniform(theta_lo, theta_hi);
  ClipResult r = clip(x, p.theta);
  p.clean = x;
  p.clipped = std::move(r.clipped);
  p.mask = std::move(r.mask);
  return p;
}

}  // namespace declip
