#pragma once

#include <utility>
#include <vector>

#include "declip/waveform.hpp"

namespace declip {

struct SpadeParams {
  int frame_len = 1024;  // power of two (DFT analysis)
  int hop = 256;
  int max_iters = 500;
  int sparsity_start = 1;  // k0, one-sided components kept initially
  int sparsity_step = 1;   // components added per relaxation
  double tol = 0.1;        // ADMM residual threshold, ||Ax - z||_2

  void validate() const;
};

struct SpadeReport {
  int total_frames = 0;
  int processed_frames = 0;      // frames containing clipped samples
  int non_converged_frames = 0;  // hit max_iters above tol (best iterate kept)
  // (first, best) ADMM residual per processed frame.
  std::vector<std::pair<double, double>> frame_residuals;
};

struct SpadeResult {
  Waveform output;
  SpadeReport report;
};

// Frame-wise ADMM declipping: alternate hard-thresholding of the frame's
// unitary DFT coefficients with projection onto the per-sample clipping
// constraints, relaxing the sparsity budget every iteration; Hann overlap-add,
// then a final global projection. Reliable samples pass through exactly.
SpadeResult declip_aspade(const Waveform& y, const ClipMask& mask,
                          const SpadeParams& params = {});

}  // namespace declip
