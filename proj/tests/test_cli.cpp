#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "declip/corpus.hpp"
#include "declip/mask_io.hpp"
#include "declip/metrics.hpp"
#include "declip/rng.hpp"
#include "declip/signal.hpp"
#include "declip/tensor_io.hpp"
#include "declip/wav_io.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(DECLIP_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

declip::Waveform make_test_wave(const std::string& path, std::uint64_t seed) {
  declip::Rng rng(seed);
  declip::Waveform w = declip::synth_clip(6000, 16000, rng);
  declip::write_wav(path, w);
  return declip::read_wav(path);  // float32-rounded reference
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bare invocation fails, help succeeds") {
  CliResult bare = run_cli("");
  CHECK(bare.exit_code == 1);

  CliResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  for (const char* sub :
       {"clip", "declip", "train", "eval", "make-corpus", "stft",
        "region-report"})
    CHECK(help.output.find(sub) != std::string::npos);
}

TEST_CASE("clip hits a target level and writes a mask sidecar") {
  testutil::TempDir dir("cli");
  const auto ref = make_test_wave(dir.file("in.wav"), 501);

  CliResult r = run_cli("clip " + dir.file("in.wav") + " " +
                        dir.file("out.wav") + " --target-sdr 7 --mask " +
                        dir.file("out.mask"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("theta ") != std::string::npos);
  CHECK(r.output.find("achieved_sdr_db ") != std::string::npos);
  CHECK(r.output.find("clipped_samples ") != std::string::npos);

  declip::Waveform clipped = declip::read_wav(dir.file("out.wav"));
  const double got = declip::sdr(ref.samples, clipped.samples);
  CHECK(std::abs(got - 7.0) <= 0.02);  // float32 storage rounding on top

  declip::ClipMask mask = declip::read_mask(dir.file("out.mask"));
  CHECK(mask.size() == ref.size());
  CHECK(mask.any_clipped());
}

TEST_CASE("clip accepts an explicit threshold") {
  testutil::TempDir dir("cli");
  make_test_wave(dir.file("in.wav"), 502);
  CliResult r = run_cli("clip " + dir.file("in.wav") + " " +
                        dir.file("out.wav") + " --theta 0.25");
  REQUIRE(r.exit_code == 0);
  declip::Waveform clipped = declip::read_wav(dir.file("out.wav"));
  for (double v : clipped.samples) CHECK(std::abs(v) <= 0.2500001);
}

TEST_CASE("unreachable target exits with the usage code") {
  testutil::TempDir dir("cli");
  make_test_wave(dir.file("in.wav"), 503);
  CliResult r = run_cli("clip " + dir.file("in.wav") + " " +
                        dir.file("out.wav") + " --target-sdr -40");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("dB") != std::string::npos);
}

TEST_CASE("missing input exits with the data code") {
  testutil::TempDir dir("cli");
  CliResult r = run_cli("clip " + dir.file("absent.wav") + " " +
                        dir.file("out.wav") + " --theta 0.3");
  CHECK(r.exit_code == 2);
}

TEST_CASE("aspade declipping via the command line") {
  testutil::TempDir dir("cli");
  const auto ref = make_test_wave(dir.file("in.wav"), 504);

  CliResult c = run_cli("clip " + dir.file("in.wav") + " " +
                        dir.file("clipped.wav") + " --target-sdr 15 --mask " +
                        dir.file("clipped.mask"));
  REQUIRE(c.exit_code == 0);

  CliResult d = run_cli("declip " + dir.file("clipped.wav") + " " +
                        dir.file("restored.wav") + " --method aspade --mask " +
                        dir.file("clipped.mask") + " --max-iters 100");
  CAPTURE(d.output);
  REQUIRE(d.exit_code == 0);
  CHECK(d.output.find("frames ") != std::string::npos);
  CHECK(d.output.find("processed ") != std::string::npos);

  declip::Waveform clipped = declip::read_wav(dir.file("clipped.wav"));
  declip::Waveform restored = declip::read_wav(dir.file("restored.wav"));
  declip::ClipMask mask = declip::read_mask(dir.file("clipped.mask"));
  const double before = declip::sdr_clipped(ref.samples, clipped.samples, mask);
  const double after = declip::sdr_clipped(ref.samples, restored.samples, mask);
  CHECK(after > before);
}

TEST_CASE("declip can recover the mask from a threshold") {
  testutil::TempDir dir("cli");
  make_test_wave(dir.file("in.wav"), 505);
  CliResult c = run_cli("clip " + dir.file("in.wav") + " " +
                        dir.file("clipped.wav") + " --theta 0.2");
  REQUIRE(c.exit_code == 0);
  CliResult d = run_cli("declip " + dir.file("clipped.wav") + " " +
                        dir.file("restored.wav") +
                        " --method aspade --theta 0.2 --max-iters 50");
  CHECK(d.exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("restored.wav")));
}

TEST_CASE("model method requires a checkpoint argument") {
  testutil::TempDir dir("cli");
  make_test_wave(dir.file("in.wav"), 506);
  CliResult d = run_cli("declip " + dir.file("in.wav") + " " +
                        dir.file("out.wav") + " --method model --theta 0.3");
  CHECK(d.exit_code == 1);
}

TEST_CASE("stft dumps a packed spectrogram tensor") {
  testutil::TempDir dir("cli");
  make_test_wave(dir.file("in.wav"), 507);
  CliResult r = run_cli("stft " + dir.file("in.wav") + " " +
                        dir.file("spec.dtn") + " --fft 256 --hop 64");
  REQUIRE(r.exit_code == 0);
  declip::ad::Tensor t = declip::ad::load_tensor(dir.file("spec.dtn"));
  REQUIRE(t.node()->shape.size() == 3);
  CHECK(t.node()->shape[0] == 2);
  CHECK(t.node()->shape[1] == 129);
  CHECK(t.node()->shape[2] == 6000 / 64 + 1);
}

TEST_CASE("make-corpus materializes the directory layout") {
  testutil::TempDir dir("cli");
  CliResult r = run_cli("make-corpus --out " + dir.file("corpus") +
                        " --seed 11 --train 3 --val 2 --test 2 "
                        "--seconds 0.15");
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(dir.file("corpus")) / "train" / "0002.wav"));
  CHECK(fs::exists(fs::path(dir.file("corpus")) / "val" / "0001.wav"));
  CHECK(fs::exists(fs::path(dir.file("corpus")) / "test" / "0001.wav"));

  declip::Corpus c = declip::load_corpus(dir.file("corpus"));
  CHECK(c.train.size() == 3);
  CHECK(c.train[0].size() == 2400);
}

TEST_CASE("region-report prints split error energies") {
  testutil::TempDir dir("cli");
  make_test_wave(dir.file("ref.wav"), 508);
  CliResult c = run_cli("clip " + dir.file("ref.wav") + " " +
                        dir.file("est.wav") + " --theta 0.3 --mask " +
                        dir.file("m.mask"));
  REQUIRE(c.exit_code == 0);
  CliResult r = run_cli("region-report --ref " + dir.file("ref.wav") +
                        " --est " + dir.file("est.wav") + " --mask " +
                        dir.file("m.mask") + " --dump " + dir.file("dump.csv"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("reliable_samples ") != std::string::npos);
  CHECK(r.output.find("clipped_samples ") != std::string::npos);
  CHECK(r.output.find("error_energy ") != std::string::npos);
  std::ifstream dump(dir.file("dump.csv"));
  std::string header;
  REQUIRE(std::getline(dump, header));
  CHECK(header == "time,ref,est,upper,lower,label");
}

TEST_CASE("train then declip and eval with the model") {
  testutil::TempDir dir("cli");
  CliResult mk = run_cli("make-corpus --out " + dir.file("corpus") +
                         " --seed 21 --train 4 --val 2 --test 2 "
                         "--seconds 0.3");
  REQUIRE(mk.exit_code == 0);

  CliResult tr = run_cli(
      "train --corpus " + dir.file("corpus") + " --out " + dir.file("m.ckpt") +
      " --seed 5 --epochs 2 --batch 2 --crop-seconds 0.2 "
      "--channels 8 --blocks 1 --heads 2 --groups 4 --fft 64 --stft-hop 16");
  CAPTURE(tr.output);
  REQUIRE(tr.exit_code == 0);
  CHECK(tr.output.find("parameters ") != std::string::npos);
  CHECK(tr.output.find("epoch 1 ") != std::string::npos);
  CHECK(tr.output.find("epoch 2 ") != std::string::npos);
  CHECK(tr.output.find("best_epoch ") != std::string::npos);
  CHECK(tr.output.find("checkpoint ") != std::string::npos);
  REQUIRE(std::filesystem::exists(dir.file("m.ckpt")));

  make_test_wave(dir.file("in.wav"), 509);
  CliResult c = run_cli("clip " + dir.file("in.wav") + " " +
                        dir.file("clipped.wav") + " --theta 0.2");
  REQUIRE(c.exit_code == 0);
  CliResult d = run_cli("declip " + dir.file("clipped.wav") + " " +
                        dir.file("restored.wav") +
                        " --method model --checkpoint " + dir.file("m.ckpt"));
  CAPTURE(d.output);
  REQUIRE(d.exit_code == 0);
  declip::Waveform restored = declip::read_wav(dir.file("restored.wav"));
  CHECK(restored.size() == 6000);

  CliResult ev = run_cli("eval --corpus " + dir.file("corpus") +
                         " --out " + dir.file("eval.csv") +
                         " --checkpoint " + dir.file("m.ckpt") +
                         " --levels 3,inf --methods clipped,model --pretty");
  CAPTURE(ev.output);
  REQUIRE(ev.exit_code == 0);
  std::ifstream csv(dir.file("eval.csv"));
  std::string header;
  REQUIRE(std::getline(csv, header));
  CHECK(header.rfind("version,method,level_db", 0) == 0);
  int data_lines = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++data_lines;
  CHECK(data_lines == 4);
}

}  // TEST_SUITE
