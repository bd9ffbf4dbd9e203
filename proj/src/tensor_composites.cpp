#include "declip/tensor_composites.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "declip/errors.hpp"

namespace declip::ad {

Tensor stft_tensor(const Tensor& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.shape().size() != 1)
    throw InvalidArgument("stft_tensor: expected a 1-D signal, got " +
                          shape_str(x.shape()));
  const int n = x.dim(0);
  const int pad = cfg.center ? cfg.win_length / 2 : 0;
  const int frames = cfg.frames_for(n);
  Tensor p = pad > 0 ? pad_reflect(x, pad, pad) : x;
  Tensor fr = frame(p, cfg.win_length, cfg.hop);
  if (fr.dim(0) != frames)
    throw InvalidArgument("stft_tensor: frame count mismatch");
  Tensor w = Tensor::constant({cfg.win_length}, hann_window(cfg.win_length));
  Tensor wf = mul(fr, expand(w, fr.shape()));
  Tensor packed = rfft_pack(wf, cfg.fft_size);  // [T, 2, bins]
  return permute(packed, {1, 2, 0});            // [2, bins, T]
}

Tensor istft_tensor(const Tensor& spec, const StftConfig& cfg, int out_len) {
  cfg.validate();
  if (out_len <= 0) throw InvalidArgument("istft_tensor: out_len must be positive");
  const Shape& s = spec.shape();
  if (s.size() != 3 || s[0] != 2 || s[1] != cfg.bins())
    throw InvalidArgument("istft_tensor: expected [2, " +
                          std::to_string(cfg.bins()) + ", frames], got " +
                          shape_str(s));
  const int frames = s[2];
  if (frames != cfg.frames_for(out_len))
    throw InvalidArgument("istft_tensor: frame count does not match out_len");
  const int pad = cfg.center ? cfg.win_length / 2 : 0;
  const long long acc_len =
      static_cast<long long>(frames - 1) * cfg.hop + cfg.win_length;

  const std::vector<double> win = hann_window(cfg.win_length);
  std::vector<double> norm(acc_len, 0.0);
  for (int t = 0; t < frames; ++t) {
    const long long base = static_cast<long long>(t) * cfg.hop;
    for (int i = 0; i < cfg.win_length; ++i)
      norm[base + i] += win[i] * win[i];
  }
  std::vector<double> inv_norm(acc_len, 0.0);
  for (long long j = 0; j < acc_len; ++j) {
    const bool in_crop = j >= pad && j < pad + out_len;
    if (norm[j] <= 1e-10) {
      if (in_crop)
        throw NumericalError(
            "istft: window overlap-add normalization vanished at sample " +
            std::to_string(j - pad));
      continue;  // padding region never read back; keep it finite
    }
    inv_norm[j] = 1.0 / norm[j];
  }
  if (pad + out_len > acc_len)
    throw NumericalError(
        "istft: window overlap-add normalization vanished at sample " +
        std::to_string(acc_len - pad));

  Tensor perm = permute(spec, {2, 0, 1});        // [T, 2, bins]
  Tensor full = irfft(perm, cfg.fft_size);       // [T, fft_size]
  Tensor lim = cfg.win_length < cfg.fft_size
                   ? slice(full, 1, 0, cfg.win_length)
                   : full;
  Tensor w = Tensor::constant({cfg.win_length}, win);
  Tensor wlim = mul(lim, expand(w, lim.shape()));
  Tensor ola = overlap_add(wlim, cfg.hop, static_cast<int>(acc_len));
  Tensor scaled = mul(ola, Tensor::constant({static_cast<int>(acc_len)},
                                            std::move(inv_norm)));
  return slice(scaled, 0, pad, out_len);
}

LossGraph composite_loss(const Tensor& est, std::span<const double> ref,
                         const MrstftConfig& cfg) {
  if (est.shape().size() != 1)
    throw InvalidArgument("composite_loss: expected a 1-D estimate, got " +
                          shape_str(est.shape()));
  const int n = est.dim(0);
  if (static_cast<std::size_t>(n) != ref.size())
    throw InvalidArgument("composite_loss: length mismatch: estimate " +
                          std::to_string(n) + ", reference " +
                          std::to_string(ref.size()));

  LossGraph out;
  Tensor ref_t = Tensor::constant({n}, std::vector<double>(ref.begin(), ref.end()));
  Tensor l1 = scale(abs_sum(sub(est, ref_t)), 1.0 / n);
  Tensor total = scale(l1, cfg.lambda_wave);
  out.parts.wave_l1 = l1.item();

  for (const StftResolution& r : cfg.resolutions) {
    const StftConfig sc_cfg = r.to_stft_config();
    const ComplexSpectrogram ref_spec = stft(ref, sc_cfg);
    const std::vector<double> ref_mag = magnitude(ref_spec);
    double ref_norm_sq = 0.0;
    for (double m : ref_mag) ref_norm_sq += m * m;
    if (ref_norm_sq == 0.0)
      throw NumericalError(
          "composite_loss: all-zero reference spectrogram at fft_size " +
          std::to_string(r.fft_size));

    Tensor est_spec = stft_tensor(est, sc_cfg);  // [2, F, T]
    Tensor re = slice(est_spec, 0, 0, 1);
    Tensor im = slice(est_spec, 0, 1, 1);
    Tensor mag = complex_magnitude(re, im);  // [1, F, T]
    const Shape mag_shape = mag.shape();

    Tensor ref_mag_t = Tensor::constant(mag_shape, ref_mag);
    Tensor diff = sub(ref_mag_t, mag);
    Tensor sc_num = sqrt(sum(mul(diff, diff)));
    Tensor sc = scale(sc_num, 1.0 / std::sqrt(ref_norm_sq));

    std::vector<double> log_ref(ref_mag.size());
    for (std::size_t i = 0; i < ref_mag.size(); ++i)
      log_ref[i] = std::log(std::max(ref_mag[i], cfg.mag_floor));
    Tensor log_est = log(clamp_min(mag, cfg.mag_floor));
    Tensor mag_l = scale(
        abs_sum(sub(log_est, Tensor::constant(mag_shape, std::move(log_ref)))),
        1.0 / static_cast<double>(ref_mag.size()));

    out.parts.spectral.push_back({r.fft_size, sc.item(), mag_l.item()});
    total = add(total, scale(add(sc, mag_l), cfg.lambda_spec));
  }
  out.parts.total = total.item();
  out.total = total;
  return out;
}

}  // namespace declip::ad
