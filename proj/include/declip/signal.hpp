#pragma once

#include <span>

#include "declip/waveform.hpp"

namespace declip {

// Hard clipping: y = x where |x| <= theta, otherwise theta * sign(x).
// Samples exactly at |x| == theta are untouched and labeled reliable.
ClipResult clip(const Waveform& x, double theta);

// Finds theta such that sdr(x, clip(x, theta)) is within tol_db of
// target_sdr_db, by bisection over (0, max|x|]. An infinite target returns
// max|x| (no sample altered). Throws UnreachableTarget if the target lies
// outside the achievable range and NumericalError if bisection fails to
// converge within max_iters.
double find_threshold(const Waveform& x, double target_sdr_db,
                      double tol_db = 0.01, int max_iters = 100);

// Recovers a mask from an already-clipped signal: samples at or beyond
// +/-(theta - eps) are marked clipped on the matching side. With eps == 0
// samples sitting exactly at +/-theta are marked clipped, so this may be a
// superset of the mask clip() produced.
ClipMask mask_from_clipped(std::span<const double> y, double theta,
                           double eps = 0.0);

// Largest achievable clipping level below which targets are unreachable:
// sdr(x, clip(x, theta)) as theta -> 0. Exposed for error reporting and tests.
double min_achievable_sdr(const Waveform& x);

}  // namespace declip
