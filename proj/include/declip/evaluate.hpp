#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "declip/aspade.hpp"
#include "declip/metrics.hpp"
#include "declip/model.hpp"
#include "declip/waveform.hpp"

namespace declip {

struct EvalConfig {
  std::vector<double> levels_db = {1.0, 3.0, 7.0, 15.0,
                                   std::numeric_limits<double>::infinity()};
  std::vector<std::string> methods = {"clipped", "aspade", "model"};
  MrstftConfig loss;
  int threads = 0;  // 0: the DECLIP_NUM_THREADS / hardware default

  void validate() const;
};

struct EvalRow {
  std::string method;
  double level_db = 0.0;
  int n_items = 0;
  double sdr_db = 0.0;
  bool sdr_c_valid = false;  // false at the unclipped level
  double sdr_c_db = 0.0;
  LossBreakdown loss;  // per-item means
};

// Clips every item to each level, restores it with each method, and reports
// mean metrics. Items are processed in parallel but merged by index, so the
// result is independent of scheduling. `model`/`spade` may be null when the
// corresponding method is not requested.
std::vector<EvalRow> evaluate_corpus(const std::vector<Waveform>& items,
                                     const EvalConfig& cfg,
                                     const DeclipModel* model,
                                     const SpadeParams* spade);

inline constexpr int kEvalCsvVersion = 1;

// Fixed-schema CSV: version,method,level_db,n_items,sdr_db,sdr_c_db,
// loss_total,loss_l1,then sc/mag pairs per resolution. Infinite means print
// as "inf"; the SDR_c cell is blank where undefined.
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows,
                    const MrstftConfig& loss_cfg);

// Table-shaped text rendering (methods by rows, levels by columns).
std::string format_eval_table(const std::vector<EvalRow>& rows);

struct RegionReport {
  std::size_t n_reliable = 0;
  std::size_t n_clipped = 0;
  double reliable_error_energy = 0.0;
  double clipped_error_energy = 0.0;
};

// Squared-error energies split by the mask's regions.
RegionReport region_report(std::span<const double> ref,
                           std::span<const double> est, const ClipMask& mask);

// Plot-ready columns: time,ref,est,upper,lower,label — one row per sample,
// with the threshold lines held constant at +/-theta.
void write_region_dump(std::ostream& out, std::span<const double> ref,
                       std::span<const double> est, const ClipMask& mask,
                       double theta, int sample_rate);

}  // namespace declip
