#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "declip/corpus.hpp"
#include "declip/metrics.hpp"
#include "declip/model.hpp"

namespace declip {

struct TrainConfig {
  double lr = 1e-3;
  int batch = 4;
  int epochs = 20;
  double weight_decay = 0.01;
  double theta_min = 0.01;
  double theta_max = 0.125;
  MrstftConfig loss;  // wave/spectral weights 100/1
  std::uint64_t seed = 0;
  double crop_seconds = 0.2;  // training/validation excerpt length
  int patience = 10;          // epochs without validation improvement

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  LossBreakdown val_parts;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 if no epoch completed validation
  double best_val_loss = 0.0;
  bool early_stopped = false;
  bool diverged = false;
};

// 1-based index of the first minimum.
int argmin_epoch(const std::vector<double>& losses);

// Scales a clipped/clean pair to a fixed 0.1 input peak so the model sees a
// consistent level; returns the scale applied.
double normalize_pair(std::vector<double>& clipped, std::vector<double>& clean);

// Runs the optimization loop over random crops of the training split, with a
// fixed-crop validation pass per epoch. The best-validation model is written
// to checkpoint_path every time it improves; on divergence the last written
// checkpoint is left in place. One line per epoch goes to `log` when given:
//   epoch E train T val V l1 A sc<F1> S1 mag<F1> M1 ...
TrainReport train(DeclipModel& model, const Corpus& corpus,
                  const TrainConfig& cfg, const std::string& checkpoint_path,
                  std::ostream* log = nullptr);

}  // namespace declip
