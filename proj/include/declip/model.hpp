#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "declip/rng.hpp"
#include "declip/stft.hpp"
#include "declip/tensor.hpp"
#include "declip/waveform.hpp"

namespace declip {

struct TgramConfig {
  int f_bins = 257;
  int win_length = 512;
  int hop = 128;
  int n_refine_layers = 3;
  double leaky_slope = 0.01;
};

// Temporal branch tied to the spectrogram geometry: first-layer kernel =
// window, stride = hop, channel count = bin count.
TgramConfig tgram_for(const StftConfig& stft);

struct ModelConfig {
  int channels = 16;  // embedding width C
  int n_blocks = 2;
  int n_heads = 4;
  int sdb_groups = 4;
  StftConfig stft;
  TgramConfig tgram;
  int sample_rate = 16000;
  // When false the temporal-feature channel is fed as zeros (the branch is
  // still constructed so checkpoints stay layout-compatible).
  bool fuse_tgram = true;

  ModelConfig() : tgram(tgram_for(stft)) {}
  void validate() const;
};

class DeclipModel {
 public:
  DeclipModel(ModelConfig cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, ad::Tensor>>& parameters() {
    return params_;
  }
  const std::vector<std::pair<std::string, ad::Tensor>>& parameters() const {
    return params_;
  }
  ad::Tensor param(const std::string& name) const;
  std::int64_t parameter_count() const;

  // Stage forwards, exposed for inspection; shapes as documented.
  ad::Tensor tgram_forward(const ad::Tensor& x) const;  // [N] -> [1,F,T]
  ad::Tensor assemble_input(const ad::Tensor& spec,
                            const ad::Tensor& tgram) const;  // -> [3,F,T]
  ad::Tensor encoder_forward(const ad::Tensor& x_in) const;  // -> [C,F,T]
  ad::Tensor block_forward(
      const ad::Tensor& h, int block_index,
      std::vector<ad::AttentionCapture>* captures = nullptr) const;
  ad::Tensor decoder_forward(const ad::Tensor& h) const;  // -> [2,F,T]

  // Full graph: waveform tensor [N] -> declipped waveform tensor [N].
  ad::Tensor forward(const ad::Tensor& y,
                     std::vector<ad::AttentionCapture>* captures = nullptr) const;

  // Inference entry point: checks the sample rate, peak-normalizes the input
  // to 0.1, runs without gradient recording, undoes the scaling.
  Waveform declip(const Waveform& y) const;

  void save(const std::string& path) const;
  static DeclipModel load(const std::string& path);

  static constexpr std::uint32_t kCheckpointVersion = 1;

 private:
  explicit DeclipModel(ModelConfig cfg);  // zero-filled parameters
  void register_params(Rng* rng);
  ad::Tensor add_param(const std::string& name, ad::Shape shape, Rng* rng,
                       double fill);
  ad::Tensor sdb_forward(const ad::Tensor& h, const std::string& prefix) const;
  ad::Tensor transformer_forward(const ad::Tensor& x, const std::string& prefix,
                                 ad::AttentionCapture* capture) const;

  ModelConfig cfg_;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace declip
