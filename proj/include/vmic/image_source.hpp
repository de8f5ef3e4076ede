#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "vmic/room_model.hpp"

namespace vmic {

struct ImageSource {
  Vec3 position;
  int reflection_order = 0;  // total wall bounces over all three axes
  double distance_to_mic = 0.0;
  double amplitude = 0.0;
};

struct ImpulseResponse {
  std::string source_label;
  std::size_t mic_index = 0;
  double sample_rate = 48000.0;
  std::vector<double> taps;
};

// Amplitude reflection coefficient shared by all six faces.
double reflection_coefficient(const RoomModel& room);

// Every mirror image of `source` with |nx| + |ny| + |nz| <= max_order, the
// direct path first. Amplitude is beta^order / (4 pi d).
std::vector<ImageSource> enumerate_images(const RoomModel& room, const Vec3& source,
                                          const Vec3& mic);

inline constexpr int kSincHalfWidth = 40;  // 81-tap kernel

ImpulseResponse compute_rir(const RoomModel& room, const Vec3& source, const Vec3& mic,
                            std::string source_label = {}, std::size_t mic_index = 0);

// One value per line, round-trip precision.
void write_rir_text(std::ostream& out, const ImpulseResponse& rir);
std::vector<double> read_rir_text(std::istream& in);

}  // namespace vmic
