// Acceptance gate: one pass/fail line per criterion, exit 0 only when every
// criterion holds. Long-running criteria stream progress notes to stderr so
// stdout stays a clean checklist.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "declip/aspade.hpp"
#include "declip/corpus.hpp"
#include "declip/errors.hpp"
#include "declip/metrics.hpp"
#include "declip/model.hpp"
#include "declip/rng.hpp"
#include "declip/signal.hpp"
#include "declip/stft.hpp"
#include "declip/tensor_composites.hpp"
#include "declip/train.hpp"
#include "declip/wav_io.hpp"

namespace fs = std::filesystem;
using namespace declip;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Options {
  std::string cli;
  std::string unit;
  fs::path work;
  std::set<int> only;  // empty: run everything
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

void note(const std::string& msg) { std::cerr << "  .. " << msg << "\n"; }

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cmd(const std::string& cmd) {
  CmdResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) {
    r.output = "popen failed";
    return r;
  }
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ModelConfig toy_model_config() {
  ModelConfig cfg;
  cfg.channels = 16;
  cfg.n_blocks = 2;
  cfg.n_heads = 4;
  cfg.sdb_groups = 4;
  cfg.stft = StftConfig{128, 128, 32, true};
  cfg.tgram = tgram_for(cfg.stft);
  cfg.sample_rate = 16000;
  return cfg;
}

Waveform three_sines(int n, int rate, Rng& rng) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(n, 0.0);
  for (int s = 0; s < 3; ++s) {
    const double f = rng.uniform(80.0, 3500.0);
    const double a = rng.uniform(0.4, 1.0);
    const double p = rng.uniform(0.0, 2 * kPi);
    for (int i = 0; i < n; ++i)
      w.samples[i] += a * std::sin(2 * kPi * f * i / rate + p);
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  for (double& v : w.samples) v /= peak;
  return w;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_gradients(const Options& opt) {
  const double t0 = now_seconds();
  CmdResult unit = run_cmd(opt.unit + " -ts=autodiff");
  const double suite_s = now_seconds() - t0;
  if (unit.exit_code != 0)
    return {false, "op-level finite-difference suite failed:\n" + unit.output};
  if (suite_s >= 120.0)
    return {false, "op-level suite took " + fmt(suite_s, 1) + " s (>= 120 s)"};
  note("op-level suite passed in " + fmt(suite_s, 1) + " s");

  // End-to-end: perturb a handful of parameter coordinates through the full
  // model + composite loss and compare against the recorded gradients.
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.n_blocks = 1;
  cfg.n_heads = 2;
  cfg.sdb_groups = 4;
  cfg.stft = StftConfig{64, 64, 16, true};
  cfg.tgram = tgram_for(cfg.stft);
  Rng mrng(0xE2E);
  DeclipModel model(cfg, mrng);

  Rng srng(0xE2E5);
  Waveform clean = synth_clip(320, 16000, srng);
  ClipResult cr = clip(clean, 0.4);
  std::vector<double> y = cr.clipped.samples;
  std::vector<double> x = clean.samples;
  normalize_pair(y, x);

  MrstftConfig loss_cfg;
  loss_cfg.resolutions = {{64, 16, 64}};

  auto loss_value = [&]() {
    ad::NoGradGuard guard;
    ad::Tensor est = model.forward(ad::Tensor::constant({320}, y));
    return ad::composite_loss(est, x, loss_cfg).parts.total;
  };

  for (auto& [name, p] : model.parameters()) p.zero_grad();
  {
    ad::Tensor est = model.forward(ad::Tensor::constant({320}, y));
    ad::LossGraph lg = ad::composite_loss(est, x, loss_cfg);
    lg.total.backward();
  }

  Rng pick(0xE2EF);
  auto& params = model.parameters();
  double worst = 0.0;
  for (int probe = 0; probe < 8; ++probe) {
    auto& [name, p] =
        params[static_cast<std::size_t>(pick.uniform_int(
            0, static_cast<std::int64_t>(params.size()) - 1))];
    if (!p.has_grad()) return {false, "parameter " + name + " has no gradient"};
    const std::size_t i = static_cast<std::size_t>(
        pick.uniform_int(0, p.size() - 1));
    const double ad_grad = p.grad()[i];
    const double v0 = p.values()[i];
    const double h = 1e-5 * std::max(1.0, std::abs(v0));
    p.raw_values()[i] = v0 + h;
    const double fp = loss_value();
    p.raw_values()[i] = v0 - h;
    const double fm = loss_value();
    p.raw_values()[i] = v0;
    const double fd = (fp - fm) / (2 * h);
    const double rel =
        std::abs(ad_grad - fd) / std::max({std::abs(fd), std::abs(ad_grad),
                                           1e-6});
    worst = std::max(worst, rel);
    if (rel >= 1e-3)
      return {false, "end-to-end gradient mismatch at " + name + "[" +
                         std::to_string(i) + "]: ad " + fmt(ad_grad, 9) +
                         " vs fd " + fmt(fd, 9)};
  }
  return {true, "ops " + fmt(suite_s, 1) + " s; end-to-end worst rel err " +
                    fmt(worst, 7)};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion_stft(const Options&) {
  Rng rng(0x57F7);
  const StftConfig configs[] = {
      {512, 512, 128, true}, {1024, 1024, 256, true}, {256, 128, 64, true}};
  double worst_rt = 0.0, worst_parseval = 0.0;
  for (const auto& cfg : configs) {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 4000 + static_cast<int>(rng.uniform_int(0, 8000));
      std::vector<double> x(n);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      ComplexSpectrogram spec = stft(x, cfg);
      auto back = istft(spec, n);
      for (int i = 0; i < n; ++i)
        worst_rt = std::max(worst_rt, std::abs(back[i] - x[i]));

      // Per-frame Parseval against the windowed, reflect-padded frames.
      auto win = hann_window(cfg.win_length);
      const int pad = cfg.win_length / 2;
      auto sample_at = [&](int i) {
        int j = i - pad;
        if (j < 0) j = -j;
        if (j >= n) j = 2 * (n - 1) - j;
        return x[j];
      };
      for (int t = 0; t < spec.frames; ++t) {
        double frame_e = 0.0;
        for (int k = 0; k < cfg.win_length; ++k) {
          const double v = win[k] * sample_at(t * cfg.hop + k);
          frame_e += v * v;
        }
        double spec_e =
            spec.real(0, t) * spec.real(0, t) +
            spec.real(spec.bins - 1, t) * spec.real(spec.bins - 1, t);
        for (int f = 1; f < spec.bins - 1; ++f)
          spec_e += 2.0 * (spec.real(f, t) * spec.real(f, t) +
                           spec.imag(f, t) * spec.imag(f, t));
        spec_e /= cfg.fft_size;
        worst_parseval =
            std::max(worst_parseval,
                     std::abs(spec_e - frame_e) / std::max(1.0, frame_e));
      }
    }
  }
  const bool ok = worst_rt < 1e-10 && worst_parseval < 1e-6;
  return {ok, "max round-trip err " + fmt(worst_rt, 14) +
                  ", worst Parseval rel err " + fmt(worst_parseval, 12)};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_clipping(const Options&) {
  Rng rng(0xC11);
  double worst_target = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Waveform x = synth_clip(8000, 16000, rng);
    for (double target : {1.0, 3.0, 7.0, 15.0}) {
      const double theta = find_threshold(x, target);
      ClipResult r = clip(x, theta);
      const double got = sdr(x.samples, r.clipped.samples);
      worst_target = std::max(worst_target, std::abs(got - target));
      if (std::abs(got - target) > 0.01)
        return {false, "target " + fmt(target, 2) + " dB missed: got " +
                           fmt(got, 4) + " dB"};

      // Exhaustive invariants: bound, reliability, and idempotence.
      ClipResult again = clip(r.clipped, theta);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x.samples[i], yi = r.clipped.samples[i];
        if (std::abs(yi) > theta) return {false, "bound violated"};
        const bool reliable =
            r.mask.labels[i] == SampleLabel::kReliable;
        if (reliable != (std::abs(xi) <= theta))
          return {false, "reliability label wrong at sample " +
                             std::to_string(i)};
        if (reliable && yi != xi)
          return {false, "reliable sample altered at " + std::to_string(i)};
        if (again.clipped.samples[i] != yi)
          return {false, "clip is not idempotent at " + std::to_string(i)};
      }
    }
  }
  return {true, "worst target error " + fmt(worst_target, 4) +
                    " dB over 20 signals x 4 levels"};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_loss_identities(const Options&) {
  Rng rng(0x105);
  std::vector<double> x(6000);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);

  auto zero = total_loss(x, x);
  if (zero.total != 0.0) return {false, "total_loss(x, x) != 0"};

  auto twice = x;
  for (double& v : twice) v *= 2.0;
  auto b2 = total_loss(x, twice);
  for (const auto& term : b2.spectral)
    if (term.sc != 1.0)
      return {false, "sc at |X_est| = 2|X| is " + fmt(term.sc, 15) +
                         ", want exactly 1"};

  auto scaled = x;
  for (double& v : scaled) v *= std::exp(1.0);
  auto be = total_loss(x, scaled);
  for (const auto& term : be.spectral)
    if (std::abs(term.mag - 1.0) >= 1e-12)
      return {false, "mag at |X_est| = e|X| is " + fmt(term.mag, 15)};

  // Recomposition against the independent oracle parts.
  std::vector<double> y(6000);
  for (double& v : y) v = rng.uniform(-1.0, 1.0);
  MrstftConfig cfg;
  auto b = total_loss(x, y, cfg);
  double recomposed = cfg.lambda_wave * b.wave_l1;
  for (const auto& term : b.spectral)
    recomposed += cfg.lambda_spec * (term.sc + term.mag);
  if (std::abs(b.total - recomposed) >= 1e-10)
    return {false, "recomposition off by " + fmt(b.total - recomposed, 15)};

  // The differentiable composite must agree with the numeric oracle.
  ad::NoGradGuard guard;
  ad::LossGraph lg =
      ad::composite_loss(ad::Tensor::constant({6000}, y), x, cfg);
  if (std::abs(lg.parts.total - b.total) >= 1e-10)
    return {false, "graph loss " + fmt(lg.parts.total, 12) +
                       " vs numeric " + fmt(b.total, 12)};
  return {true, "identities, recomposition, and graph/numeric agreement hold"};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion_aspade(const Options&) {
  Rng rng(0xA5BA);
  double gain_sum = 0.0, worst_time = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Waveform x = three_sines(16000, 16000, rng);
    const double theta = find_threshold(x, 15.0);
    ClipResult cr = clip(x, theta);
    if (!cr.mask.any_clipped()) return {false, "level produced no clipping"};

    const double t0 = now_seconds();
    SpadeResult r = declip_aspade(cr.clipped, cr.mask);
    const double dt = now_seconds() - t0;
    worst_time = std::max(worst_time, dt);
    if (dt >= 10.0)
      return {false, "signal " + std::to_string(trial) + " took " +
                         fmt(dt, 2) + " s (>= 10 s per 1 s signal)"};

    for (std::size_t i = 0; i < x.size(); ++i) {
      const double yi = cr.clipped.samples[i], oi = r.output.samples[i];
      switch (cr.mask.labels[i]) {
        case SampleLabel::kReliable:
          if (oi != yi)
            return {false, "reliable sample changed at " + std::to_string(i)};
          break;
        case SampleLabel::kClippedHigh:
          if (oi < yi) return {false, "upper constraint violated"};
          break;
        case SampleLabel::kClippedLow:
          if (oi > yi) return {false, "lower constraint violated"};
          break;
      }
    }
    const double before = sdr_clipped(x.samples, cr.clipped.samples, cr.mask);
    const double after = sdr_clipped(x.samples, r.output.samples, cr.mask);
    gain_sum += after - before;
  }
  const double mean_gain = gain_sum / 20.0;
  return {mean_gain > 3.0,
          "mean SDR_c gain " + fmt(mean_gain, 2) + " dB (need > 3), slowest " +
              fmt(worst_time, 2) + " s"};
}

// ------------------------------------------------------------- criteria 6 & 7

struct TrainedToy {
  TrainReport report;
  std::string checkpoint;
};

TrainedToy train_toy(const Corpus& corpus, const fs::path& ckpt,
                     std::uint64_t seed, int epochs, double crop_seconds,
                     bool fuse, std::ostream* log) {
  ModelConfig mcfg = toy_model_config();
  mcfg.fuse_tgram = fuse;
  Rng mrng(Rng(seed).fork(0xA11).seed());
  DeclipModel model(mcfg, mrng);

  TrainConfig tcfg;
  tcfg.lr = 1e-3;
  tcfg.batch = 4;
  tcfg.epochs = epochs;
  tcfg.weight_decay = 0.01;
  tcfg.seed = seed;
  tcfg.crop_seconds = crop_seconds;
  tcfg.patience = 10;

  TrainedToy out;
  out.checkpoint = ckpt.string();
  out.report = train(model, corpus, tcfg, out.checkpoint, log);
  return out;
}

std::vector<double> smoothed(const std::vector<double>& v, int window) {
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(window)
                               ? i + 1 - window
                               : 0;
    double acc = 0.0;
    for (std::size_t j = lo; j <= i; ++j) acc += v[j];
    s[i] = acc / static_cast<double>(i - lo + 1);
  }
  return s;
}

Outcome criterion_toy_training(const Options& opt, const Corpus& corpus) {
  const fs::path ckpt = opt.work / "toy.ckpt";
  note("training the toy model (this is the long step)");
  const double t0 = now_seconds();
  TrainedToy toy =
      train_toy(corpus, ckpt, 0x5EED, 14, 0.2, true, &std::cerr);
  const double train_s = now_seconds() - t0;
  note("toy training took " + fmt(train_s / 60.0, 1) + " min");
  if (train_s >= 30.0 * 60.0)
    return {false, "training took " + fmt(train_s / 60.0, 1) + " min (>= 30)"};
  if (toy.report.diverged) return {false, "training diverged"};
  if (toy.report.best_epoch == 0) return {false, "no epoch validated"};

  std::vector<double> val;
  for (const auto& e : toy.report.epochs) val.push_back(e.val_loss);
  const auto smooth = smoothed(val, 3);
  const double first = smooth.front();
  const double at_best =
      smooth[static_cast<std::size_t>(toy.report.best_epoch - 1)];
  if (!(toy.report.best_epoch > 1 && at_best < first))
    return {false, "smoothed validation did not decrease: epoch 1 " +
                       fmt(first, 6) + " vs best epoch " +
                       std::to_string(toy.report.best_epoch) + " " +
                       fmt(at_best, 6)};

  DeclipModel model = DeclipModel::load(toy.checkpoint);

  // (b) 3 dB held-out improvement.
  double sdr_clip_sum = 0.0, sdr_model_sum = 0.0;
  for (const Waveform& x : corpus.test) {
    const double theta = find_threshold(x, 3.0);
    ClipResult cr = clip(x, theta);
    Waveform restored = model.declip(cr.clipped);
    sdr_clip_sum += sdr(x.samples, cr.clipped.samples);
    sdr_model_sum += sdr(x.samples, restored.samples);
  }
  const double mean_clipped = sdr_clip_sum / corpus.test.size();
  const double mean_model = sdr_model_sum / corpus.test.size();
  note("3 dB held-out: clipped " + fmt(mean_clipped, 2) + " dB, model " +
       fmt(mean_model, 2) + " dB");
  if (mean_model - mean_clipped < 2.0)
    return {false, "3 dB improvement " + fmt(mean_model - mean_clipped, 2) +
                       " dB (need >= 2); val curve and timing were fine"};

  // (c) identity behaviour on unclipped input.
  double sdr_id_sum = 0.0;
  for (const Waveform& x : corpus.test) {
    Waveform out = model.declip(x);
    sdr_id_sum += sdr(x.samples, out.samples);
  }
  const double mean_identity = sdr_id_sum / corpus.test.size();
  note("unclipped held-out SDR " + fmt(mean_identity, 2) + " dB");
  if (mean_identity < 20.0)
    return {false, "unclipped output SDR " + fmt(mean_identity, 2) +
                       " dB (need >= 20)"};

  return {true, "train " + fmt(train_s / 60.0, 1) + " min; val " +
                    fmt(first, 4) + " -> " + fmt(at_best, 4) +
                    " (best epoch " + std::to_string(toy.report.best_epoch) +
                    "); 3 dB gain " + fmt(mean_model - mean_clipped, 2) +
                    " dB; identity " + fmt(mean_identity, 2) + " dB"};
}

Outcome criterion_fusion(const Options& opt, const Corpus& corpus) {
  Corpus small;
  small.train.assign(corpus.train.begin(), corpus.train.begin() + 40);
  small.val.assign(corpus.val.begin(), corpus.val.begin() + 12);
  small.test.assign(corpus.test.begin(), corpus.test.begin() + 20);

  int fused_wins = 0;
  std::string per_seed;
  for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
    note("fusion check seed " + std::to_string(seed));
    const fs::path fused_ckpt =
        opt.work / ("fuse_" + std::to_string(seed) + ".ckpt");
    const fs::path ablated_ckpt =
        opt.work / ("ablate_" + std::to_string(seed) + ".ckpt");
    TrainedToy fused =
        train_toy(small, fused_ckpt, seed, 5, 0.15, true, nullptr);
    TrainedToy ablated =
        train_toy(small, ablated_ckpt, seed, 5, 0.15, false, nullptr);
    if (fused.report.best_epoch == 0 || ablated.report.best_epoch == 0)
      return {false, "a fusion-check run failed to validate"};

    DeclipModel fm = DeclipModel::load(fused.checkpoint);
    DeclipModel am = DeclipModel::load(ablated.checkpoint);
    double fsum = 0.0, asum = 0.0;
    for (const Waveform& x : small.test) {
      const double theta = find_threshold(x, 15.0);
      ClipResult cr = clip(x, theta);
      fsum += sdr(x.samples, fm.declip(cr.clipped).samples);
      asum += sdr(x.samples, am.declip(cr.clipped).samples);
    }
    const double fmean = fsum / small.test.size();
    const double amean = asum / small.test.size();
    per_seed += " seed " + std::to_string(seed) + ": fused " + fmt(fmean, 2) +
                " vs ablated " + fmt(amean, 2) + ";";
    note("seed " + std::to_string(seed) + ": fused " + fmt(fmean, 2) +
         " dB, ablated " + fmt(amean, 2) + " dB");
    if (amean <= fmean) ++fused_wins;
  }
  return {fused_wins >= 2,
          "fused >= ablated in " + std::to_string(fused_wins) + "/3 seeds:" +
              per_seed};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion_eval_protocol(const Options& opt) {
  const fs::path dir = opt.work / "eval_corpus";
  CmdResult mk = run_cmd(opt.cli + " make-corpus --out " + dir.string() +
                         " --seed 88 --train 1 --val 1 --test 6 "
                         "--seconds 0.5");
  if (mk.exit_code != 0) return {false, "make-corpus failed:\n" + mk.output};

  const fs::path csv = opt.work / "protocol.csv";
  CmdResult ev = run_cmd(opt.cli + " eval --corpus " + dir.string() +
                         " --out " + csv.string() +
                         " --levels 1,3,7,15 --methods clipped");
  if (ev.exit_code != 0) return {false, "eval failed:\n" + ev.output};

  std::ifstream in(csv);
  std::string header;
  if (!std::getline(in, header)) return {false, "empty CSV"};
  if (header.rfind("version,method,level_db,n_items,sdr_db,sdr_c_db", 0) != 0)
    return {false, "unexpected CSV header: " + header};

  const double levels[] = {1.0, 3.0, 7.0, 15.0};
  std::string line;
  int row = 0;
  std::string seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() < 8) return {false, "short CSV row: " + line};
    if (cells[1] != "clipped") return {false, "unexpected method row"};
    if (row >= 4) return {false, "too many rows"};
    const double sdr_db = std::stod(cells[4]);
    const double sdr_c_db = std::stod(cells[5]);
    if (std::abs(sdr_db - levels[row]) > 0.01)
      return {false, "row " + std::to_string(row) + " SDR " + fmt(sdr_db, 3) +
                         " vs level " + fmt(levels[row], 2)};
    if (!(sdr_c_db < sdr_db))
      return {false, "SDR_c " + fmt(sdr_c_db, 3) + " not below SDR " +
                         fmt(sdr_db, 3)};
    seen += " " + fmt(sdr_db, 2) + "/" + fmt(sdr_c_db, 2);
    ++row;
  }
  if (row != 4) return {false, "expected 4 rows, got " + std::to_string(row)};
  return {true, "identity rows SDR/SDR_c:" + seen};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion_determinism(const Options& opt) {
  auto pipeline = [&](const fs::path& root) -> std::string {
    fs::create_directories(root);
    const std::string corpus = (root / "corpus").string();
    const std::string ckpt = (root / "model.ckpt").string();
    const std::string csv = (root / "eval.csv").string();
    CmdResult mk = run_cmd(opt.cli + " make-corpus --out " + corpus +
                           " --seed 777 --train 6 --val 2 --test 2 "
                           "--seconds 0.5");
    if (mk.exit_code != 0) return "make-corpus failed:\n" + mk.output;
    CmdResult tr = run_cmd(
        opt.cli + " train --corpus " + corpus + " --out " + ckpt +
        " --seed 777 --epochs 2 --batch 2 --crop-seconds 0.2 "
        "--channels 8 --blocks 1 --heads 2 --groups 4 --fft 64 "
        "--stft-hop 16");
    if (tr.exit_code != 0) return "train failed:\n" + tr.output;
    CmdResult ev = run_cmd(opt.cli + " eval --corpus " + corpus + " --out " +
                           csv + " --checkpoint " + ckpt +
                           " --levels 3,inf --methods clipped,model");
    if (ev.exit_code != 0) return "eval failed:\n" + ev.output;
    return "";
  };

  note("pipeline run 1");
  std::string err = pipeline(opt.work / "det_a");
  if (!err.empty()) return {false, "run 1: " + err};
  note("pipeline run 2");
  err = pipeline(opt.work / "det_b");
  if (!err.empty()) return {false, "run 2: " + err};

  const std::string ckpt_a = read_bytes(opt.work / "det_a" / "model.ckpt");
  const std::string ckpt_b = read_bytes(opt.work / "det_b" / "model.ckpt");
  if (ckpt_a.empty()) return {false, "run 1 produced no checkpoint"};
  if (ckpt_a != ckpt_b) return {false, "checkpoints differ between runs"};

  const std::string csv_a = read_bytes(opt.work / "det_a" / "eval.csv");
  const std::string csv_b = read_bytes(opt.work / "det_b" / "eval.csv");
  if (csv_a.empty()) return {false, "run 1 produced no CSV"};
  if (csv_a != csv_b) return {false, "CSVs differ between runs"};
  return {true, "checkpoints and CSVs byte-identical (" +
                    std::to_string(ckpt_a.size()) + " and " +
                    std::to_string(csv_a.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--cli") opt.cli = next();
    else if (arg == "--unit") opt.unit = next();
    else if (arg == "--work") opt.work = next();
    else if (arg == "--only") {
      std::stringstream ss(next());
      std::string tok;
      while (std::getline(ss, tok, ',')) opt.only.insert(std::stoi(tok));
    } else {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
  }
  if (opt.cli.empty() || opt.unit.empty() || opt.work.empty()) {
    std::cerr << "usage: declip_acceptance --cli PATH --unit PATH --work DIR"
                 " [--only N,N,...]\n";
    return 2;
  }

  std::error_code ec;
  fs::remove_all(opt.work, ec);
  fs::create_directories(opt.work);

  // The training corpus is shared by criteria 6 and 7.
  Corpus corpus;
  auto ensure_corpus = [&]() {
    if (!corpus.train.empty()) return;
    note("generating the 200-clip corpus");
    CorpusSpec spec;
    spec.n_train = 120;
    spec.n_val = 40;
    spec.n_test = 40;
    spec.seconds_per_clip = 1.0;
    spec.sample_rate = 16000;
    spec.seed = 0xC0FFEE;
    corpus = make_corpus(spec);
  };

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, "gradient correctness",
       [&] { return criterion_gradients(opt); }},
      {2, "STFT fidelity", [&] { return criterion_stft(opt); }},
      {3, "clipping protocol", [&] { return criterion_clipping(opt); }},
      {4, "loss identities", [&] { return criterion_loss_identities(opt); }},
      {5, "sparse-declipper efficacy", [&] { return criterion_aspade(opt); }},
      {6, "toy training run",
       [&] {
         ensure_corpus();
         return criterion_toy_training(opt, corpus);
       }},
      {7, "temporal-fusion ablation",
       [&] {
         ensure_corpus();
         return criterion_fusion(opt, corpus);
       }},
      {8, "evaluation protocol", [&] { return criterion_eval_protocol(opt); }},
      {9, "pipeline determinism", [&] { return criterion_determinism(opt); }},
  };

  int failures = 0;
  const double t0 = now_seconds();
  for (const auto& entry : entries) {
    if (!opt.only.empty() && !opt.only.count(entry.id)) continue;
    std::cerr << "criterion " << entry.id << " (" << entry.name
              << ") ...\n";
    Outcome r;
    try {
      r = entry.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << entry.id << " (" << entry.name << "): "
              << (r.pass ? "PASS" : "FAIL") << " - " << r.detail << "\n";
    std::cout.flush();
    if (!r.pass) ++failures;
  }
  std::cout << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criteria failed")
            << " in " << fmt((now_seconds() - t0) / 60.0, 1) << " min\n";
  return failures == 0 ? 0 : 1;
}
