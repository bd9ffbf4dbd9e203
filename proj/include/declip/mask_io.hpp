#pragma once

#include <string>

#include "declip/waveform.hpp"

namespace declip {

// Mask sidecar format: magic "DCM1", u32 little-endian sample count, then one
// byte per sample (0 reliable, 1 clipped high, 2 clipped low).
void write_mask(const std::string& path, const ClipMask& mask);
ClipMask read_mask(const std::string& path);

}  // namespace declip
