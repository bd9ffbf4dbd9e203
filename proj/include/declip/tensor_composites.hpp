#pragma once

#include <span>

#include "declip/metrics.hpp"
#include "declip/stft.hpp"
#include "declip/tensor.hpp"

namespace declip::ad {

// Differentiable centered STFT of a 1-D tensor, output [2, bins, frames]
// (channel 0 real, channel 1 imaginary). Matches stft() numerically.
Tensor stft_tensor(const Tensor& x, const StftConfig& cfg);

// Differentiable weighted overlap-add inverse of [2, bins, frames] back to
// [out_len]. Matches istft() to rounding.
Tensor istft_tensor(const Tensor& spec, const StftConfig& cfg, int out_len);

struct LossGraph {
  Tensor total;               // scalar, connected to the estimate's graph
  LossBreakdown parts;        // numeric snapshot of the terms
};

// lambda_wave * L1 + lambda_spec * sum over resolutions of
// (spectral convergence + log-magnitude distance), with the reference side
// precomputed outside the graph.
LossGraph composite_loss(const Tensor& est, std::span<const double> ref,
                         const MrstftConfig& cfg = {});

}  // namespace declip::ad
