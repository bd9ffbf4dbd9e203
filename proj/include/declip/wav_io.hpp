#pragma once

#include <string>

#include "declip/waveform.hpp"

namespace declip {

enum class WavEncoding {
  kPcm16,    // scale 32768, clamped to [-32768, 32767] on write
  kFloat32,  // IEEE float, stored as-is
};

// Reads a mono RIFF/WAVE file (PCM16 or float32). Unknown chunks are skipped;
// anything else is a DataError.
Waveform read_wav(const std::string& path);

void write_wav(const std::string& path, const Waveform& wav,
               WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace declip
