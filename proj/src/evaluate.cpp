#include "declip/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

#include "declip/errors.hpp"
#include "declip/signal.hpp"
#include "declip/threading.hpp"

namespace declip {

void EvalConfig::validate() const {
  if (levels_db.empty()) throw InvalidArgument("eval: no SDR levels");
  if (methods.empty()) throw InvalidArgument("eval: no methods");
  for (const std::string& m : methods)
    if (m != "clipped" && m != "aspade" && m != "model")
      throw InvalidArgument("eval: unknown method '" + m + "'");
  for (double l : levels_db)
    if (std::isnan(l)) throw InvalidArgument("eval: NaN SDR level");
}

namespace {

struct ItemMetrics {
  double sdr = 0.0;
  bool sdr_c_valid = false;
  double sdr_c = 0.0;
  LossBreakdown loss;
};

}  // namespace

std::vector<EvalRow> evaluate_corpus(const std::vector<Waveform>& items,
                                     const EvalConfig& cfg,
                                     const DeclipModel* model,
                                     const SpadeParams* spade) {
  cfg.validate();
  if (items.empty()) throw InvalidArgument("eval: no items");
  for (const std::string& m : cfg.methods) {
    if (m == "model" && !model)
      throw InvalidArgument("eval: method 'model' requested without a checkpoint");
    if (m == "aspade" && !spade)
      throw InvalidArgument("eval: method 'aspade' requested without parameters");
  }

  std::vector<EvalRow> rows;
  for (const std::string& method : cfg.methods) {
    for (double level : cfg.levels_db) {
      std::vector<ItemMetrics> per_item(items.size());
      std::exception_ptr first_error;
      std::mutex error_mu;
      parallel_for(
          static_cast<std::int64_t>(items.size()),
          [&](std::int64_t i) {
            try {
              const Waveform& x = items[i];
              const double theta = find_threshold(x, level);
              ClipResult cr = clip(x, theta);
              const Waveform& y = cr.clipped;

              Waveform est;
              if (method == "clipped") {
                est = y;
              } else if (method == "aspade") {
                est = declip_aspade(y, cr.mask, *spade).output;
              } else {
                est = model->declip(y);
              }

              ItemMetrics& m = per_item[i];
              m.sdr = sdr(x.samples, est.samples);
              if (cr.mask.any_clipped()) {
                m.sdr_c_valid = true;
                m.sdr_c = sdr_clipped(x.samples, est.samples, cr.mask);
              }
              m.loss = total_loss(x.samples, est.samples, cfg.loss);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mu);
              if (!first_error) first_error = std::current_exception();
            }
          },
          cfg.threads);
      if (first_error) std::rethrow_exception(first_error);

      EvalRow row;
      row.method = method;
      row.level_db = level;
      row.n_items = static_cast<int>(items.size());
      row.loss.spectral.resize(cfg.loss.resolutions.size());
      for (std::size_t r = 0; r < row.loss.spectral.size(); ++r)
        row.loss.spectral[r] = {cfg.loss.resolutions[r].fft_size, 0.0, 0.0};
      int n_sdr_c = 0;
      for (const ItemMetrics& m : per_item) {
        row.sdr_db += m.sdr;
        if (m.sdr_c_valid) {
          row.sdr_c_db += m.sdr_c;
          ++n_sdr_c;
        }
        row.loss.total += m.loss.total;
        row.loss.wave_l1 += m.loss.wave_l1;
        for (std::size_t r = 0; r < m.loss.spectral.size(); ++r) {
          row.loss.spectral[r].sc += m.loss.spectral[r].sc;
          row.loss.spectral[r].mag += m.loss.spectral[r].mag;
        }
      }
      const double n = static_cast<double>(items.size());
      row.sdr_db /= n;
      if (n_sdr_c == static_cast<int>(items.size())) {
        row.sdr_c_valid = true;
        row.sdr_c_db /= n_sdr_c;
      }
      row.loss.total /= n;
      row.loss.wave_l1 /= n;
      for (auto& term : row.loss.spectral) {
        term.sc /= n;
        term.mag /= n;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_level(double v) {
  if (std::isinf(v)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows,
                    const MrstftConfig& loss_cfg) {
  out << "version,method,level_db,n_items,sdr_db,sdr_c_db,loss_total,loss_l1";
  for (const StftResolution& r : loss_cfg.resolutions)
    out << ",loss_sc_" << r.fft_size << ",loss_mag_" << r.fft_size;
  out << "\n";
  for (const EvalRow& row : rows) {
    out << kEvalCsvVersion << ',' << row.method << ',' << fmt_level(row.level_db)
        << ',' << row.n_items << ',' << fmt_metric(row.sdr_db) << ','
        << (row.sdr_c_valid ? fmt_metric(row.sdr_c_db) : std::string()) << ','
        << fmt_metric(row.loss.total) << ',' << fmt_metric(row.loss.wave_l1);
    for (const ResolutionTerms& term : row.loss.spectral)
      out << ',' << fmt_metric(term.sc) << ',' << fmt_metric(term.mag);
    out << "\n";
  }
}

std::string format_eval_table(const std::vector<EvalRow>& rows) {
  // Columns ordered by first appearance so they follow the requested levels.
  std::vector<double> levels;
  std::vector<std::string> methods;
  for (const EvalRow& r : rows) {
    if (std::find(levels.begin(), levels.end(), r.level_db) == levels.end())
      levels.push_back(r.level_db);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  }
  auto find_row = [&rows](const std::string& m, double l) -> const EvalRow* {
    for (const EvalRow& r : rows)
      if (r.method == m && ((std::isinf(r.level_db) && std::isinf(l)) ||
                            r.level_db == l))
        return &r;
    return nullptr;
  };

  std::ostringstream out;
  char buf[64];
  out << "SDR (SDR_c) by clipping level, means over the corpus\n";
  std::snprintf(buf, sizeof buf, "%-10s", "method");
  out << buf;
  for (double l : levels) {
    std::snprintf(buf, sizeof buf, " %16s", (fmt_level(l) + " dB").c_str());
    out << buf;
  }
  out << "\n";
  for (const std::string& m : methods) {
    std::snprintf(buf, sizeof buf, "%-10s", m.c_str());
    out << buf;
    for (double l : levels) {
      const EvalRow* r = find_row(m, l);
      std::string cell = "-";
      if (r) {
        if (std::isinf(r->sdr_db)) cell = "inf";
        else {
          std::snprintf(buf, sizeof buf, "%.2f", r->sdr_db);
          cell = buf;
        }
        if (r->sdr_c_valid) {
          std::snprintf(buf, sizeof buf, " (%.2f)", r->sdr_c_db);
          cell += buf;
        }
      }
      std::snprintf(buf, sizeof buf, " %16s", cell.c_str());
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

RegionReport region_report(std::span<const double> ref,
                           std::span<const double> est, const ClipMask& mask) {
  if (ref.size() != est.size() || ref.size() != mask.size())
    throw InvalidArgument("region_report: length mismatch (ref " +
                          std::to_string(ref.size()) + ", est " +
                          std::to_string(est.size()) + ", mask " +
                          std::to_string(mask.size()) + ")");
  RegionReport r;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double e = ref[i] - est[i];
    if (mask.labels[i] == SampleLabel::kReliable) {
      ++r.n_reliable;
      r.reliable_error_energy += e * e;
    } else {
      ++r.n_clipped;
      r.clipped_error_energy += e * e;
    }
  }
  return r;
}

void write_region_dump(std::ostream& out, std::span<const double> ref,
                       std::span<const double> est, const ClipMask& mask,
                       double theta, int sample_rate) {
  if (ref.size() != est.size() || ref.size() != mask.size())
    throw InvalidArgument("region dump: length mismatch");
  if (sample_rate <= 0) throw InvalidArgument("region dump: bad sample rate");
  out << "time,ref,est,upper,lower,label\n";
  char buf[160];
  for (std::size_t i = 0; i < ref.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                  static_cast<double>(i) / sample_rate, ref[i], est[i], theta,
                  -theta, static_cast<int>(mask.labels[i]));
    out << buf;
  }
}

}  // namespace declip
