#include "declip/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "declip/errors.hpp"
#include "declip/tensor_composites.hpp"
#include "declip/tensor_io.hpp"

namespace declip {

using ad::Shape;
using ad::shape_str;
using ad::Tensor;

TgramConfig tgram_for(const StftConfig& stft) {
  TgramConfig t;
  t.f_bins = stft.fft_size / 2 + 1;
  t.win_length = stft.win_length;
  t.hop = stft.hop;
  return t;
}

void ModelConfig::validate() const {
  stft.validate();
  if (channels <= 0 || n_blocks <= 0)
    throw InvalidArgument("model config: channels and n_blocks must be positive");
  if (n_heads <= 0 || channels % n_heads != 0)
    throw InvalidArgument("model config: channels " + std::to_string(channels) +
                          " not divisible by n_heads " + std::to_string(n_heads));
  if (sdb_groups <= 0 || channels % sdb_groups != 0)
    throw InvalidArgument("model config: channels " + std::to_string(channels) +
                          " not divisible by sdb_groups " +
                          std::to_string(sdb_groups));
  if (tgram.f_bins != stft.bins() || tgram.win_length != stft.win_length ||
      tgram.hop != stft.hop)
    throw InvalidArgument(
        "model config: temporal branch geometry does not match the spectrogram "
        "(bins/win/hop must agree)");
  if (tgram.n_refine_layers < 0)
    throw InvalidArgument("model config: negative refine layer count");
  if (sample_rate <= 0)
    throw InvalidArgument("model config: sample_rate must be positive");
}

DeclipModel::DeclipModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  register_params(nullptr);
}

DeclipModel::DeclipModel(ModelConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  register_params(&rng);
}

Tensor DeclipModel::add_param(const std::string& name, Shape shape, Rng* rng,
                              double fill) {
  const std::int64_t n = ad::numel(shape);
  std::vector<double> v(static_cast<std::size_t>(n), fill);
  if (rng && fill == 0.0) {
    // Weight init: centered uniform with fan-in scaling, U(-a, a),
    // a = 1/sqrt(fan_in); fan_in = all dims past the first.
    std::int64_t fan_in = 1;
    for (std::size_t d = 1; d < shape.size(); ++d) fan_in *= shape[d];
    if (fan_in > 0 && shape.size() > 1) {
      const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& x : v) x = rng->uniform(-a, a);
    }
  }
  Tensor t = Tensor::variable(shape, std::move(v));
  index_[name] = params_.size();
  params_.emplace_back(name, t);
  return t;
}

void DeclipModel::register_params(Rng* rng) {
  const int C = cfg_.channels;
  const int F = cfg_.stft.bins();
  const int G = cfg_.sdb_groups;
  const int cg = C / G;

  // Temporal branch.
  add_param("tgram.conv0.w", {F, 1, cfg_.tgram.win_length}, rng, 0.0);
  add_param("tgram.conv0.b", {F}, rng, 0.0);
  for (int i = 1; i <= cfg_.tgram.n_refine_layers; ++i) {
    const std::string p = "tgram.refine" + std::to_string(i);
    add_param(p + ".w", {F, F, 3}, rng, 0.0);
    add_param(p + ".b", {F}, rng, 0.0);
  }

  // Encoder.
  add_param("enc.up.w", {C, 3, 3, 3}, rng, 0.0);
  add_param("enc.up.b", {C}, rng, 0.0);
  for (int g = 0; g < G; ++g) {
    const std::string p = "enc.sdb.g" + std::to_string(g);
    add_param(p + ".w", {cg, cg * (1 + g), 3, 3}, rng, 0.0);
    add_param(p + ".b", {cg}, rng, 0.0);
  }

  // Dual-axis transformer blocks.
  for (int b = 0; b < cfg_.n_blocks; ++b) {
    for (const char* axis : {"f", "t"}) {
      const std::string p =
          "block" + std::to_string(b) + "." + axis + ".";
      add_param(p + "norm1.g", {C}, rng, 1.0);
      add_param(p + "norm1.b", {C}, rng, 0.0);
      add_param(p + "attn.wq", {C, C}, rng, 0.0);
      add_param(p + "attn.bq", {C}, rng, 0.0);
      add_param(p + "attn.wk", {C, C}, rng, 0.0);
      add_param(p + "attn.bk", {C}, rng, 0.0);
      add_param(p + "attn.wv", {C, C}, rng, 0.0);
      add_param(p + "attn.bv", {C}, rng, 0.0);
      add_param(p + "attn.wo", {C, C}, rng, 0.0);
      add_param(p + "attn.bo", {C}, rng, 0.0);
      add_param(p + "norm2.g", {C}, rng, 1.0);
      add_param(p + "norm2.b", {C}, rng, 0.0);
      add_param(p + "ff.w1", {2 * C, C}, rng, 0.0);
      add_param(p + "ff.b1", {2 * C}, rng, 0.0);
      add_param(p + "ff.p", {1}, rng, 0.25);
      add_param(p + "ff.w2", {C, 2 * C}, rng, 0.0);
      add_param(p + "ff.b2", {C}, rng, 0.0);
    }
  }

  // Decoder.
  for (int g = 0; g < G; ++g) {
    const std::string p = "dec.sdb.g" + std::to_string(g);
    add_param(p + ".w", {cg, cg * (1 + g), 3, 3}, rng, 0.0);
    add_param(p + ".b", {cg}, rng, 0.0);
  }
  add_param("dec.down.w", {C, 2, 3, 3}, rng, 0.0);
  add_param("dec.down.b", {2}, rng, 0.0);
}

Tensor DeclipModel::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw InvalidArgument("unknown parameter: " + name);
  return params_[it->second].second;
}

std::int64_t DeclipModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

Tensor DeclipModel::tgram_forward(const Tensor& x) const {
  if (x.shape().size() != 1)
    throw InvalidArgument("tgram_forward: expected a 1-D waveform tensor, got " +
                          shape_str(x.shape()));
  const int n = x.dim(0);
  const int frames = cfg_.stft.frames_for(n);
  const int pad = cfg_.tgram.win_length / 2;
  Tensor p = ad::pad_reflect(x, pad, pad);
  Tensor h = ad::reshape(p, {1, -1});
  h = ad::conv1d(h, param("tgram.conv0.w"), param("tgram.conv0.b"),
                 cfg_.tgram.hop, 0, 1);
  for (int i = 1; i <= cfg_.tgram.n_refine_layers; ++i) {
    const std::string pre = "tgram.refine" + std::to_string(i);
    h = ad::leaky_relu(h, cfg_.tgram.leaky_slope);
    h = ad::conv1d(h, param(pre + ".w"), param(pre + ".b"), 1, 1, 1);
  }
  if (h.dim(1) != frames)
    throw InvalidArgument("tgram_forward: frame count mismatch vs spectrogram");
  return ad::reshape(h, {1, cfg_.tgram.f_bins, frames});
}

Tensor DeclipModel::assemble_input(const Tensor& spec, const Tensor& tgram) const {
  const Shape& a = spec.shape();
  const Shape& b = tgram.shape();
  if (a.size() != 3 || b.size() != 3 || a[0] != 2 || b[0] != 1 ||
      a[1] != b[1] || a[2] != b[2])
    throw InvalidArgument("assemble_input: incompatible shapes " +
                          shape_str(a) + " and " + shape_str(b));
  return ad::concat({spec, tgram}, 0);
}

Tensor DeclipModel::sdb_forward(const Tensor& h, const std::string& prefix) const {
  const int C = cfg_.channels;
  const int G = cfg_.sdb_groups;
  const int cg = C / G;
  std::vector<Tensor> outs;
  outs.reserve(G);
  for (int g = 0; g < G; ++g) {
    Tensor in_g = ad::slice(h, 0, g * cg, cg);
    Tensor cat = in_g;
    if (g > 0) {
      std::vector<Tensor> pieces;
      pieces.push_back(in_g);
      for (int j = 0; j < g; ++j) pieces.push_back(outs[j]);
      cat = ad::concat(pieces, 0);
    }
    const std::string p = prefix + ".g" + std::to_string(g);
    outs.push_back(ad::conv2d(cat, param(p + ".w"), param(p + ".b"), 1, 1, 1));
  }
  return ad::add(h, ad::concat(outs, 0));
}

Tensor DeclipModel::encoder_forward(const Tensor& x_in) const {
  const Shape& s = x_in.shape();
  if (s.size() != 3 || s[0] != 3)
    throw InvalidArgument("encoder_forward: expected [3,F,T], got " +
                          shape_str(s));
  Tensor h = ad::conv2d(x_in, param("enc.up.w"), param("enc.up.b"), 1, 1, 1);
  return sdb_forward(h, "enc.sdb");
}

Tensor DeclipModel::transformer_forward(const Tensor& x,
                                        const std::string& prefix,
                                        ad::AttentionCapture* capture) const {
  const Shape& s = x.shape();
  auto affine = [&](const Tensor& t, const std::string& name) {
    Tensor g = ad::expand(param(name + ".g"), s);
    Tensor b = ad::expand(param(name + ".b"), s);
    return ad::add(ad::mul(t, g), b);
  };
  Tensor n1 = affine(ad::layer_stats_norm(x, {2}), prefix + "norm1");
  Tensor q = ad::linear(n1, param(prefix + "attn.wq"), param(prefix + "attn.bq"));
  Tensor k = ad::linear(n1, param(prefix + "attn.wk"), param(prefix + "attn.bk"));
  Tensor v = ad::linear(n1, param(prefix + "attn.wv"), param(prefix + "attn.bv"));
  Tensor att = ad::multi_head_attention(q, k, v, cfg_.n_heads, capture);
  Tensor o = ad::linear(att, param(prefix + "attn.wo"), param(prefix + "attn.bo"));
  Tensor h1 = ad::add(x, o);
  Tensor n2 = affine(ad::layer_stats_norm(h1, {2}), prefix + "norm2");
  Tensor f = ad::linear(n2, param(prefix + "ff.w1"), param(prefix + "ff.b1"));
  f = ad::prelu(f, param(prefix + "ff.p"));
  f = ad::linear(f, param(prefix + "ff.w2"), param(prefix + "ff.b2"));
  return ad::add(h1, f);
}

Tensor DeclipModel::block_forward(const Tensor& h, int block_index,
                                  std::vector<ad::AttentionCapture>* captures) const {
  const Shape& s = h.shape();
  if (s.size() != 3 || s[0] != cfg_.channels)
    throw InvalidArgument("block_forward: expected [C,F,T], got " +
                          shape_str(s));
  if (block_index < 0 || block_index >= cfg_.n_blocks)
    throw InvalidArgument("block_forward: block index out of range");
  const std::string base = "block" + std::to_string(block_index) + ".";

  ad::AttentionCapture* cf = nullptr;
  ad::AttentionCapture* ct = nullptr;
  if (captures) {
    captures->emplace_back();
    cf = &captures->back();
  }
  // Frequency attention: tokens are bins, frames act as batch entries.
  Tensor xf = ad::permute(h, {2, 1, 0});  // [T,F,C]
  Tensor yf = transformer_forward(xf, base + "f.", cf);
  Tensor hf = ad::permute(yf, {2, 1, 0});  // [C,F,T]

  if (captures) {
    captures->emplace_back();
    ct = &captures->back();
  }
  // Time attention: tokens are frames, bins act as batch entries.
  Tensor xt = ad::permute(hf, {1, 2, 0});  // [F,T,C]
  Tensor yt = transformer_forward(xt, base + "t.", ct);
  Tensor out = ad::permute(yt, {2, 0, 1});  // [C,F,T]

  for (double vv : out.values())
    if (!std::isfinite(vv))
      throw NumericalError("block " + std::to_string(block_index) +
                           " produced non-finite values");
  return out;
}

Tensor DeclipModel::decoder_forward(const Tensor& h) const {
  const Shape& s = h.shape();
  if (s.size() != 3 || s[0] != cfg_.channels)
    throw InvalidArgument("decoder_forward: expected [C,F,T], got " +
                          shape_str(s));
  Tensor h2 = sdb_forward(h, "dec.sdb");
  return ad::conv_transpose2d(h2, param("dec.down.w"), param("dec.down.b"), 1, 1);
}

Tensor DeclipModel::forward(const Tensor& y,
                            std::vector<ad::AttentionCapture>* captures) const {
  if (y.shape().size() != 1)
    throw InvalidArgument("forward: expected a 1-D waveform tensor, got " +
                          shape_str(y.shape()));
  const int n = y.dim(0);
  Tensor spec = ad::stft_tensor(y, cfg_.stft);
  Tensor yt;
  if (cfg_.fuse_tgram) {
    yt = tgram_forward(y);
  } else {
    yt = Tensor::zeros({1, spec.dim(1), spec.dim(2)});
  }
  Tensor h = encoder_forward(assemble_input(spec, yt));
  for (int b = 0; b < cfg_.n_blocks; ++b) h = block_forward(h, b, captures);
  Tensor out = decoder_forward(h);
  return ad::istft_tensor(out, cfg_.stft, n);
}

Waveform DeclipModel::declip(const Waveform& y) const {
  if (y.sample_rate != cfg_.sample_rate)
    throw InvalidArgument("declip: input sample rate " +
                          std::to_string(y.sample_rate) +
                          " does not match the model's " +
                          std::to_string(cfg_.sample_rate));
  if (y.samples.empty()) throw InvalidArgument("declip: empty input");
  ad::NoGradGuard no_grad;
  double peak = 0.0;
  for (double v : y.samples) peak = std::max(peak, std::abs(v));
  const double s = peak > 0.0 ? 0.1 / peak : 1.0;
  std::vector<double> scaled(y.samples.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = y.samples[i] * s;
  const int n = static_cast<int>(scaled.size());
  Tensor in = Tensor::constant({n}, std::move(scaled));
  Tensor out = forward(in);
  Waveform w;
  w.sample_rate = y.sample_rate;
  w.samples.assign(out.values().begin(), out.values().end());
  const double inv = 1.0 / s;
  for (double& v : w.samples) v *= inv;
  return w;
}

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["channels"] = c.channels;
  j["n_blocks"] = c.n_blocks;
  j["n_heads"] = c.n_heads;
  j["sdb_groups"] = c.sdb_groups;
  j["sample_rate"] = c.sample_rate;
  j["fuse_tgram"] = c.fuse_tgram;
  j["stft"] = {{"fft_size", c.stft.fft_size},
               {"win_length", c.stft.win_length},
               {"hop", c.stft.hop},
               {"center", c.stft.center}};
  j["tgram"] = {{"f_bins", c.tgram.f_bins},
                {"win_length", c.tgram.win_length},
                {"hop", c.tgram.hop},
                {"n_refine_layers", c.tgram.n_refine_layers},
                {"leaky_slope", c.tgram.leaky_slope}};
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.channels = j.at("channels").get<int>();
  c.n_blocks = j.at("n_blocks").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.sdb_groups = j.at("sdb_groups").get<int>();
  c.sample_rate = j.at("sample_rate").get<int>();
  c.fuse_tgram = j.at("fuse_tgram").get<bool>();
  const auto& s = j.at("stft");
  c.stft.fft_size = s.at("fft_size").get<int>();
  c.stft.win_length = s.at("win_length").get<int>();
  c.stft.hop = s.at("hop").get<int>();
  c.stft.center = s.at("center").get<bool>();
  const auto& t = j.at("tgram");
  c.tgram.f_bins = t.at("f_bins").get<int>();
  c.tgram.win_length = t.at("win_length").get<int>();
  c.tgram.hop = t.at("hop").get<int>();
  c.tgram.n_refine_layers = t.at("n_refine_layers").get<int>();
  c.tgram.leaky_slope = t.at("leaky_slope").get<double>();
  return c;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated header");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr char kCkptMagic[4] = {'D', 'C', 'K', 'P'};

}  // namespace

void DeclipModel::save(const std::string& path) const {
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = config_to_json(cfg_);
  nlohmann::json offsets;
  std::uint64_t off = 0;
  for (const auto& [name, t] : params_) {
    offsets[name] = off;
    off += ad::tensor_block_size(t);
  }
  manifest["params"] = offsets;
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kCkptMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : params_) ad::write_tensor(out, t);
  if (!out) throw DataError("checkpoint write failed: " + path);
}

DeclipModel DeclipModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
    throw DataError("checkpoint: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported format version " +
                    std::to_string(version));
  const std::uint32_t json_len = get_u32(in);
  if (json_len == 0 || json_len > (64u << 20))
    throw DataError("checkpoint: implausible manifest size");
  std::string text(json_len, '\0');
  in.read(text.data(), json_len);
  if (!in) throw DataError("checkpoint: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: manifest parse error: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg = config_from_json(manifest.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad config: ") + e.what());
  }

  DeclipModel model(cfg);
  const auto& offsets = manifest.at("params");
  const std::streampos blob_start = in.tellg();
  for (auto& [name, t] : model.params_) {
    if (!offsets.contains(name))
      throw DataError("checkpoint: missing parameter " + name);
    const std::uint64_t off = offsets.at(name).get<std::uint64_t>();
    in.seekg(blob_start + static_cast<std::streamoff>(off));
    ad::Tensor loaded = ad::read_tensor(in);
    if (loaded.shape() != t.shape())
      throw DataError("checkpoint: parameter " + name + " has shape " +
                      shape_str(loaded.shape()) + ", expected " +
                      shape_str(t.shape()));
    auto dst = t.raw_values();
    auto src = loaded.values();
    std::copy(src.begin(), src.end(), dst.begin());
    for (double v : src)
      if (!std::isfinite(v))
        throw DataError("checkpoint: parameter " + name +
                        " contains non-finite values");
  }
  return model;
}

}  // namespace declip
