#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "declip/aspade.hpp"
#include "declip/corpus.hpp"
#include "declip/errors.hpp"
#include "declip/evaluate.hpp"
#include "declip/mask_io.hpp"
#include "declip/metrics.hpp"
#include "declip/model.hpp"
#include "declip/signal.hpp"
#include "declip/stft.hpp"
#include "declip/tensor_io.hpp"
#include "declip/train.hpp"
#include "declip/wav_io.hpp"

namespace {

using namespace declip;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string tok = text.substr(pos, comma - pos);
    if (tok == "inf" || tok == "INF" || tok == "Inf") {
      levels.push_back(kInf);
    } else {
      try {
        levels.push_back(std::stod(tok));
      } catch (...) {
        throw InvalidArgument("bad SDR level '" + tok + "'");
      }
    }
    pos = comma + 1;
  }
  if (levels.empty()) throw InvalidArgument("empty SDR level list");
  return levels;
}

std::vector<std::string> parse_methods(const std::string& text) {
  std::vector<std::string> methods;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    methods.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return methods;
}

struct ClipArgs {
  std::string input, output, mask_path;
  double target_sdr = std::numeric_limits<double>::quiet_NaN();
  double theta = 0.0;
  bool have_theta = false;
};

int run_clip(const ClipArgs& a) {
  const Waveform in = read_wav(a.input);
  double theta;
  if (a.have_theta) {
    theta = a.theta;
  } else {
    theta = find_threshold(in, a.target_sdr);
  }
  ClipResult r = clip(in, theta);
  write_wav(a.output, r.clipped, WavEncoding::kFloat32);
  if (!a.mask_path.empty()) write_mask(a.mask_path, r.mask);
  const double achieved = sdr(in.samples, r.clipped.samples);
  std::printf("theta %.6f\n", theta);
  std::printf("achieved_sdr_db %s\n", fmt_db(achieved).c_str());
  std::printf("clipped_samples %zu of %zu\n", r.mask.clipped_count(),
              r.mask.size());
  return 0;
}

struct DeclipArgs {
  std::string input, output, method, mask_path, checkpoint;
  double theta = 0.0;
  bool have_theta = false;
  SpadeParams spade;
};

int run_declip(const DeclipArgs& a) {
  const Waveform in = read_wav(a.input);
  Waveform out;
  if (a.method == "aspade") {
    ClipMask mask;
    if (!a.mask_path.empty()) {
      mask = read_mask(a.mask_path);
      if (mask.size() != in.size())
        throw InvalidArgument("mask length " + std::to_string(mask.size()) +
                              " does not match signal length " +
                              std::to_string(in.size()));
    } else if (a.have_theta) {
      mask = mask_from_clipped(in.samples, a.theta);
    } else {
      throw InvalidArgument("method aspade needs --mask or --theta");
    }
    SpadeResult r = declip_aspade(in, mask, a.spade);
    std::printf("frames %d processed %d non_converged %d\n",
                r.report.total_frames, r.report.processed_frames,
                r.report.non_converged_frames);
    out = std::move(r.output);
  } else if (a.method == "model") {
    if (a.checkpoint.empty())
      throw InvalidArgument("method model needs --checkpoint");
    const DeclipModel model = DeclipModel::load(a.checkpoint);
    out = model.declip(in);
  } else {
    throw InvalidArgument("unknown method '" + a.method +
                          "' (expected aspade or model)");
  }
  write_wav(a.output, out, WavEncoding::kFloat32);
  return 0;
}

struct TrainArgs {
  std::string corpus_dir, out_ckpt;
  std::uint64_t seed = 0;
  TrainConfig cfg;
  int channels = 16, blocks = 2, heads = 4, groups = 4;
  int fft = 128, win = 0, hop = 32;
  bool no_tgram = false;
};

int run_train(const TrainArgs& a) {
  Corpus corpus = load_corpus(a.corpus_dir);
  if (corpus.train.empty()) throw DataError("empty training split");
  const int rate = corpus.train.front().sample_rate;

  ModelConfig mc;
  mc.channels = a.channels;
  mc.n_blocks = a.blocks;
  mc.n_heads = a.heads;
  mc.sdb_groups = a.groups;
  mc.stft.fft_size = a.fft;
  mc.stft.win_length = a.win > 0 ? a.win : a.fft;
  mc.stft.hop = a.hop;
  mc.tgram = tgram_for(mc.stft);
  mc.sample_rate = rate;
  mc.fuse_tgram = !a.no_tgram;

  Rng init_rng = Rng(a.seed).fork(0xA11ull);
  DeclipModel model(mc, init_rng);
  std::printf("parameters %lld\n",
              static_cast<long long>(model.parameter_count()));

  TrainConfig tc = a.cfg;
  tc.seed = a.seed;
  TrainReport report = train(model, corpus, tc, a.out_ckpt, &std::cout);
  if (report.diverged) {
    if (report.best_epoch > 0)
      std::fprintf(stderr,
                   "error: training diverged; checkpoint from epoch %d kept "
                   "at %s\n",
                   report.best_epoch, a.out_ckpt.c_str());
    else
      std::fprintf(stderr, "error: training diverged before any checkpoint\n");
    return 3;
  }
  std::printf("best_epoch %d val %.6f%s\n", report.best_epoch,
              report.best_val_loss, report.early_stopped ? " (early stop)" : "");
  std::printf("checkpoint %s\n", a.out_ckpt.c_str());
  return 0;
}

struct EvalArgs {
  std::string corpus_dir, out_csv, checkpoint;
  std::string levels = "1,3,7,15,inf";
  std::string methods = "clipped,aspade,model";
  bool pretty = false;
  SpadeParams spade;
};

int run_eval(const EvalArgs& a) {
  EvalConfig cfg;
  cfg.levels_db = parse_levels(a.levels);
  cfg.methods = parse_methods(a.methods);

  std::vector<Waveform> items;
  {
    namespace fs = std::filesystem;
    const fs::path dir(a.corpus_dir);
    const fs::path test_dir = dir / "test";
    const fs::path use = fs::is_directory(test_dir) ? test_dir : dir;
    std::vector<fs::path> files;
    if (!fs::is_directory(use))
      throw DataError("not a directory: " + use.string());
    for (const auto& e : fs::directory_iterator(use))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no WAV files in " + use.string());
    for (const auto& f : files) items.push_back(read_wav(f.string()));
  }

  DeclipModel* model = nullptr;
  std::optional<DeclipModel> model_storage;
  bool wants_model = false;
  for (const std::string& m : cfg.methods) wants_model |= (m == "model");
  if (wants_model) {
    if (a.checkpoint.empty())
      throw InvalidArgument("method model needs --checkpoint");
    model_storage.emplace(DeclipModel::load(a.checkpoint));
    model = &*model_storage;
  }

  std::vector<EvalRow> rows = evaluate_corpus(items, cfg, model, &a.spade);
  std::ofstream out(a.out_csv);
  if (!out) throw DataError("cannot open for writing: " + a.out_csv);
  write_eval_csv(out, rows, cfg.loss);
  if (a.pretty) std::cout << format_eval_table(rows);
  std::printf("wrote %s (%zu rows)\n", a.out_csv.c_str(), rows.size());
  return 0;
}

struct RegionArgs {
  std::string ref_path, est_path, mask_path, dump_path;
  double theta = std::numeric_limits<double>::quiet_NaN();
};

int run_region_report(const RegionArgs& a) {
  const Waveform ref = read_wav(a.ref_path);
  const Waveform est = read_wav(a.est_path);
  const ClipMask mask = read_mask(a.mask_path);
  if (ref.size() != est.size() || ref.size() != mask.size())
    throw InvalidArgument("length mismatch: ref " + std::to_string(ref.size()) +
                          ", est " + std::to_string(est.size()) + ", mask " +
                          std::to_string(mask.size()));

  double theta = a.theta;
  if (std::isnan(theta)) {
    // Tightest bound consistent with the mask: the smallest clean magnitude
    // over the clipped region (clean values there exceed the threshold).
    theta = 0.0;
    bool any = false;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (mask.labels[i] != SampleLabel::kReliable) {
        lo = std::min(lo, std::abs(ref.samples[i]));
        any = true;
      }
    if (any) theta = lo;
    else
      for (double v : ref.samples) theta = std::max(theta, std::abs(v));
  }

  RegionReport r = region_report(ref.samples, est.samples, mask);
  std::printf("reliable_samples %zu error_energy %.9e\n", r.n_reliable,
              r.reliable_error_energy);
  std::printf("clipped_samples %zu error_energy %.9e\n", r.n_clipped,
              r.clipped_error_energy);
  if (!a.dump_path.empty()) {
    std::ofstream out(a.dump_path);
    if (!out) throw DataError("cannot open for writing: " + a.dump_path);
    write_region_dump(out, ref.samples, est.samples, mask, theta,
                      ref.sample_rate);
    std::printf("dump %s\n", a.dump_path.c_str());
  }
  return 0;
}

struct CorpusArgs {
  std::string out_dir;
  CorpusSpec spec;
};

int run_make_corpus(const CorpusArgs& a) {
  Corpus c = make_corpus(a.spec);
  write_corpus(c, a.out_dir);
  std::printf("wrote %zu train, %zu val, %zu test clips to %s\n",
              c.train.size(), c.val.size(), c.test.size(), a.out_dir.c_str());
  return 0;
}

struct StftArgs {
  std::string input, output;
  StftConfig cfg;
  int win = 0;
};

int run_stft(const StftArgs& a) {
  const Waveform in = read_wav(a.input);
  StftConfig cfg = a.cfg;
  cfg.win_length = a.win > 0 ? a.win : cfg.fft_size;
  const ComplexSpectrogram spec = stft(in.samples, cfg);
  std::vector<double> packed;
  packed.reserve(2 * spec.re.size());
  packed.insert(packed.end(), spec.re.begin(), spec.re.end());
  packed.insert(packed.end(), spec.im.begin(), spec.im.end());
  ad::save_tensor(a.output,
                  ad::Tensor::constant({2, spec.bins, spec.frames},
                                       std::move(packed)));
  std::printf("wrote %s: [2, %d, %d]\n", a.output.c_str(), spec.bins,
              spec.frames);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech declipping toolkit"};
  app.require_subcommand(1);

  ClipArgs clip_args;
  auto* sub_clip = app.add_subcommand("clip", "clip a WAV to a threshold or target SDR");
  sub_clip->add_option("input", clip_args.input, "input WAV")->required();
  sub_clip->add_option("output", clip_args.output, "output WAV")->required();
  sub_clip->add_option("--mask", clip_args.mask_path, "mask sidecar to write");
  auto* opt_target = sub_clip->add_option("--target-sdr", clip_args.target_sdr,
                                          "target SDR in dB (inf allowed)");
  auto* opt_theta = sub_clip->add_option("--theta", clip_args.theta,
                                         "clipping threshold (linear)");
  opt_target->excludes(opt_theta);

  DeclipArgs declip_args;
  auto* sub_declip = app.add_subcommand("declip", "restore a clipped WAV");
  sub_declip->add_option("input", declip_args.input, "clipped WAV")->required();
  sub_declip->add_option("output", declip_args.output, "output WAV")->required();
  sub_declip->add_option("--method", declip_args.method, "aspade or model")
      ->required();
  sub_declip->add_option("--mask", declip_args.mask_path, "mask sidecar");
  auto* opt_dtheta =
      sub_declip->add_option("--theta", declip_args.theta,
                             "threshold for deriving the mask");
  sub_declip->add_option("--checkpoint", declip_args.checkpoint,
                         "model checkpoint (method model)");
  sub_declip->add_option("--frame-len", declip_args.spade.frame_len,
                         "aspade frame length");
  sub_declip->add_option("--hop", declip_args.spade.hop, "aspade hop");
  sub_declip->add_option("--max-iters", declip_args.spade.max_iters,
                         "aspade iteration cap");
  sub_declip->add_option("--tol", declip_args.spade.tol,
                         "aspade residual tolerance");

  TrainArgs train_args;
  auto* sub_train = app.add_subcommand("train", "train the declipping model");
  sub_train->add_option("--corpus", train_args.corpus_dir,
                        "corpus directory (train/val/test)")
      ->required();
  sub_train->add_option("--out", train_args.out_ckpt, "checkpoint to write")
      ->required();
  sub_train->add_option("--seed", train_args.seed, "random seed");
  sub_train->add_option("--epochs", train_args.cfg.epochs, "max epochs");
  sub_train->add_option("--batch", train_args.cfg.batch, "batch size");
  sub_train->add_option("--lr", train_args.cfg.lr, "learning rate");
  sub_train->add_option("--weight-decay", train_args.cfg.weight_decay,
                        "decoupled weight decay");
  sub_train->add_option("--crop-seconds", train_args.cfg.crop_seconds,
                        "training crop length in seconds");
  sub_train->add_option("--patience", train_args.cfg.patience,
                        "early-stop patience in epochs");
  sub_train->add_option("--channels", train_args.channels, "embedding width");
  sub_train->add_option("--blocks", train_args.blocks, "transformer blocks");
  sub_train->add_option("--heads", train_args.heads, "attention heads");
  sub_train->add_option("--groups", train_args.groups, "split-dense groups");
  sub_train->add_option("--fft", train_args.fft, "analysis FFT size");
  sub_train->add_option("--win", train_args.win,
                        "analysis window (default: FFT size)");
  sub_train->add_option("--stft-hop", train_args.hop, "analysis hop");
  sub_train->add_flag("--no-tgram", train_args.no_tgram,
                      "zero the temporal-feature channel");

  EvalArgs eval_args;
  auto* sub_eval = app.add_subcommand("eval", "metric table over a corpus");
  sub_eval->add_option("--corpus", eval_args.corpus_dir,
                       "corpus directory (test split used when present)")
      ->required();
  sub_eval->add_option("--out", eval_args.out_csv, "CSV to write")->required();
  sub_eval->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint");
  sub_eval->add_option("--levels", eval_args.levels,
                       "comma list of SDR levels, inf allowed");
  sub_eval->add_option("--methods", eval_args.methods,
                       "comma list from clipped,aspade,model");
  sub_eval->add_flag("--pretty", eval_args.pretty, "print a text table too");

  RegionArgs region_args;
  auto* sub_region =
      app.add_subcommand("region-report", "per-region reconstruction errors");
  sub_region->add_option("--ref", region_args.ref_path, "clean WAV")->required();
  sub_region->add_option("--est", region_args.est_path, "estimate WAV")
      ->required();
  sub_region->add_option("--mask", region_args.mask_path, "mask sidecar")
      ->required();
  sub_region->add_option("--theta", region_args.theta,
                         "threshold for the dump's guide lines");
  sub_region->add_option("--dump", region_args.dump_path,
                         "write plot columns CSV here");

  CorpusArgs corpus_args;
  auto* sub_corpus =
      app.add_subcommand("make-corpus", "generate the synthetic corpus");
  sub_corpus->add_option("--out", corpus_args.out_dir, "output directory")
      ->required();
  sub_corpus->add_option("--seed", corpus_args.spec.seed, "random seed");
  sub_corpus->add_option("--train", corpus_args.spec.n_train, "train clips");
  sub_corpus->add_option("--val", corpus_args.spec.n_val, "validation clips");
  sub_corpus->add_option("--test", corpus_args.spec.n_test, "test clips");
  sub_corpus->add_option("--seconds", corpus_args.spec.seconds_per_clip,
                         "clip length in seconds");
  sub_corpus->add_option("--rate", corpus_args.spec.sample_rate, "sample rate");

  StftArgs stft_args;
  auto* sub_stft =
      app.add_subcommand("stft", "dump a spectrogram tensor ([2,F,T])");
  sub_stft->add_option("input", stft_args.input, "input WAV")->required();
  sub_stft->add_option("output", stft_args.output, "tensor file to write")
      ->required();
  sub_stft->add_option("--fft", stft_args.cfg.fft_size, "FFT size");
  sub_stft->add_option("--win", stft_args.win, "window (default: FFT size)");
  sub_stft->add_option("--hop", stft_args.cfg.hop, "hop");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(sub_clip)) {
      clip_args.have_theta = opt_theta->count() > 0;
      if (!clip_args.have_theta && opt_target->count() == 0)
        throw InvalidArgument("clip needs --target-sdr or --theta");
      return run_clip(clip_args);
    }
    if (app.got_subcommand(sub_declip)) {
      declip_args.have_theta = opt_dtheta->count() > 0;
      return run_declip(declip_args);
    }
    if (app.got_subcommand(sub_train)) return run_train(train_args);
    if (app.got_subcommand(sub_eval)) return run_eval(eval_args);
    if (app.got_subcommand(sub_region)) return run_region_report(region_args);
    if (app.got_subcommand(sub_corpus)) return run_make_corpus(corpus_args);
    if (app.got_subcommand(sub_stft)) return run_stft(stft_args);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
