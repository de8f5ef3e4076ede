#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "vmic/dsp.hpp"

namespace vmic {

enum class WavFormat { kPcm16, kFloat32 };

struct WavReadResult {
  SignalBuffer audio;  // mono; left channel of multi-channel files
  std::uint16_t channels = 1;
  WavFormat format = WavFormat::kPcm16;

  bool dropped_channels() const { return channels > 1; }
};

// PCM 16-bit (scaled to [-1, 1)) or IEEE float 32-bit. WAVE_FORMAT_EXTENSIBLE
// is accepted when its subformat is one of those two.
WavReadResult read_wav(std::istream& in, const std::string& name = "wav");
WavReadResult load_wav(const std::filesystem::path& path);

// Samples are clipped to [-1, 1] for PCM16.
void write_wav(std::ostream& out, const SignalBuffer& audio, WavFormat format = WavFormat::kFloat32);

}  // namespace vmic
