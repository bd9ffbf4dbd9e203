#include "declip/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "declip/errors.hpp"
#include "declip/optimizer.hpp"
#include "declip/tensor_composites.hpp"

namespace declip {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("train: lr must be positive");
  if (batch <= 0) throw InvalidArgument("train: batch must be positive");
  if (epochs <= 0) throw InvalidArgument("train: epochs must be positive");
  if (weight_decay < 0.0)
    throw InvalidArgument("train: weight_decay must be non-negative");
  if (!(theta_min > 0.0) || !(theta_max > theta_min))
    throw InvalidArgument("train: theta range must be positive and ordered");
  if (!(crop_seconds > 0.0))
    throw InvalidArgument("train: crop_seconds must be positive");
  if (patience <= 0) throw InvalidArgument("train: patience must be positive");
}

int argmin_epoch(const std::vector<double>& losses) {
  if (losses.empty()) return 0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < losses.size(); ++i)
    if (losses[i] < losses[best]) best = i;
  return static_cast<int>(best) + 1;
}

double normalize_pair(std::vector<double>& clipped, std::vector<double>& clean) {
  double peak = 0.0;
  for (double v : clipped) peak = std::max(peak, std::abs(v));
  const double s = peak > 0.0 ? 0.1 / peak : 1.0;
  for (double& v : clipped) v *= s;
  for (double& v : clean) v *= s;
  return s;
}

namespace {

struct CropPair {
  std::vector<double> clipped;
  std::vector<double> clean;
};

// Clip a crop of the clean source at theta, then bring the pair to the
// model's working level.
CropPair make_example(const Waveform& x, int offset, int len, double theta) {
  CropPair ex;
  ex.clean.assign(x.samples.begin() + offset, x.samples.begin() + offset + len);
  ex.clipped = ex.clean;
  for (double& v : ex.clipped) {
    if (v > theta) v = theta;
    else if (v < -theta) v = -theta;
  }
  normalize_pair(ex.clipped, ex.clean);
  return ex;
}

void log_epoch(std::ostream* log, const EpochRecord& rec) {
  if (!log) return;
  char buf[64];
  std::snprintf(buf, sizeof buf, "epoch %d", rec.epoch);
  *log << buf;
  std::snprintf(buf, sizeof buf, " train %.6f", rec.train_loss);
  *log << buf;
  std::snprintf(buf, sizeof buf, " val %.6f", rec.val_loss);
  *log << buf;
  std::snprintf(buf, sizeof buf, " l1 %.6f", rec.val_parts.wave_l1);
  *log << buf;
  for (const auto& term : rec.val_parts.spectral) {
    std::snprintf(buf, sizeof buf, " sc%d %.6f", term.fft_size, term.sc);
    *log << buf;
    std::snprintf(buf, sizeof buf, " mag%d %.6f", term.fft_size, term.mag);
    *log << buf;
  }
  *log << "\n" << std::flush;
}

}  // namespace

TrainReport train(DeclipModel& model, const Corpus& corpus,
                  const TrainConfig& cfg, const std::string& checkpoint_path,
                  std::ostream* log) {
  cfg.validate();
  if (corpus.train.empty() || corpus.val.empty())
    throw InvalidArgument("train: corpus must have train and val items");

  const int rate = model.config().sample_rate;
  for (const auto& split : {&corpus.train, &corpus.val})
    for (const Waveform& w : *split)
      if (w.sample_rate != rate)
        throw InvalidArgument("train: corpus sample rate " +
                              std::to_string(w.sample_rate) +
                              " does not match the model's " +
                              std::to_string(rate));

  const int crop = static_cast<int>(cfg.crop_seconds * rate);
  for (const auto& split : {&corpus.train, &corpus.val})
    for (const Waveform& w : *split)
      if (static_cast<int>(w.size()) < crop)
        throw InvalidArgument("train: corpus clip shorter than the crop length");
  for (const auto& res : cfg.loss.resolutions) {
    const int win = res.win_length > 0 ? res.win_length : res.fft_size;
    if (crop <= win / 2)
      throw InvalidArgument(
          "train: crop of " + std::to_string(crop) +
          " samples is too short for the " + std::to_string(win) +
          "-sample loss analysis window");
  }

  AdamWConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = cfg.weight_decay;
  AdamW opt(model.parameters(), ocfg);

  Rng root(cfg.seed);

  // Per-item validation conditions are frozen across epochs so the curve is
  // comparable epoch to epoch.
  struct ValItem {
    int offset;
    double theta;
  };
  std::vector<ValItem> val_items(corpus.val.size());
  for (std::size_t i = 0; i < corpus.val.size(); ++i) {
    Rng r = root.fork(0xF0000000ull + i);
    val_items[i].offset =
        static_cast<int>((corpus.val[i].size() - crop) / 2);
    val_items[i].theta = r.uniform(cfg.theta_min, cfg.theta_max);
  }

  TrainReport report;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<int> order(corpus.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng erng = root.fork(0xE0000000ull + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(erng.uniform_int(0, i - 1))]);

    double train_sum = 0.0;
    int n_batches = 0;
    bool aborted = false;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch) {
      const std::size_t b1 = std::min(b0 + cfg.batch, order.size());
      const int actual = static_cast<int>(b1 - b0);
      opt.zero_grad();
      double batch_loss = 0.0;
      try {
        for (std::size_t j = b0; j < b1; ++j) {
          const Waveform& x = corpus.train[order[j]];
          const int max_off = static_cast<int>(x.size()) - crop;
          const int off = static_cast<int>(erng.uniform_int(0, max_off));
          const double theta = erng.uniform(cfg.theta_min, cfg.theta_max);
          CropPair ex = make_example(x, off, crop, theta);
          ad::Tensor in = ad::Tensor::constant({crop}, std::move(ex.clipped));
          ad::Tensor est = model.forward(in);
          ad::LossGraph lg = ad::composite_loss(est, ex.clean, cfg.loss);
          ad::scale(lg.total, 1.0 / actual).backward();
          batch_loss += lg.parts.total / actual;
        }
        opt.step();
      } catch (const NumericalError&) {
        aborted = true;
        break;
      }
      train_sum += batch_loss;
      ++n_batches;
    }
    if (aborted) {
      report.diverged = true;
      break;
    }

    // Validation on the frozen crops, values only.
    double val_sum = 0.0;
    LossBreakdown val_parts;
    val_parts.spectral.resize(cfg.loss.resolutions.size());
    for (std::size_t r = 0; r < val_parts.spectral.size(); ++r)
      val_parts.spectral[r] = {cfg.loss.resolutions[r].fft_size, 0.0, 0.0};
    bool val_bad = false;
    {
      ad::NoGradGuard no_grad;
      for (std::size_t i = 0; i < corpus.val.size(); ++i) {
        CropPair ex = make_example(corpus.val[i], val_items[i].offset, crop,
                                   val_items[i].theta);
        try {
          ad::Tensor in = ad::Tensor::constant({crop}, std::move(ex.clipped));
          ad::Tensor est = model.forward(in);
          ad::LossGraph lg = ad::composite_loss(est, ex.clean, cfg.loss);
          val_sum += lg.parts.total;
          val_parts.wave_l1 += lg.parts.wave_l1;
          for (std::size_t r = 0; r < lg.parts.spectral.size(); ++r) {
            val_parts.spectral[r].sc += lg.parts.spectral[r].sc;
            val_parts.spectral[r].mag += lg.parts.spectral[r].mag;
          }
        } catch (const NumericalError&) {
          val_bad = true;
          break;
        }
      }
    }
    const double n_val = static_cast<double>(corpus.val.size());
    const double val_loss = val_bad
                                ? std::numeric_limits<double>::quiet_NaN()
                                : val_sum / n_val;
    val_parts.total = val_loss;
    val_parts.wave_l1 /= n_val;
    for (auto& term : val_parts.spectral) {
      term.sc /= n_val;
      term.mag /= n_val;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = n_batches > 0 ? train_sum / n_batches : 0.0;
    rec.val_loss = val_loss;
    rec.val_parts = val_parts;
    report.epochs.push_back(rec);
    log_epoch(log, rec);

    if (!std::isfinite(val_loss)) {
      report.diverged = true;
      break;
    }
    if (val_loss < report.best_val_loss) {
      report.best_val_loss = val_loss;
      report.best_epoch = epoch;
      model.save(checkpoint_path);
    } else if (epoch - report.best_epoch >= cfg.patience) {
      report.early_stopped = true;
      break;
    }
  }

  if (report.best_epoch == 0 && !report.diverged)
    throw NumericalError("train: no epoch produced a finite validation loss");
  return report;
}

}  // namespace declip
