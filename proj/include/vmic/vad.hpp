#pragma once

#include <cstddef>
#include <vector>

#include "vmic/dsp.hpp"

namespace vmic {

enum class SegmentKind { kSpeech, kNoise };

// Half-open sample interval [start_sample, end_sample).
struct Segment {
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;
  SegmentKind kind = SegmentKind::kSpeech;

  std::size_t length() const { return end_sample - start_sample; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct VadParams {
  double band_low = 1000.0;   // Hz
  double band_high = 3000.0;  // Hz
  double trigger = 0.1;       // of the band-limited peak
  double hold = 0.300;        // s, re-trigger window
  double pad = 0.250;         // s, added on both sides
  double merge_gap = 0.250;   // s, shorter pauses are absorbed
  double min_len = 0.500;     // s
  double max_len = 1.200;     // s
  double hard_cap = 1.449;    // s

  // Throws std::invalid_argument on violated ordering constraints.
  void validate(double sample_rate) const;
};

// Hard spectral mask [low, high] over the whole clip, then peak-normalized
// to 1 (all-zero output stays zero).
std::vector<double> band_limit(const SignalBuffer& audio, double low, double high);

// Speech/noise partition of [0, size) sorted by start.
std::vector<Segment> segment_vad(const SignalBuffer& audio, const VadParams& params = {});

// Consecutive speech segments of `length_s`, the last holding the remainder.
std::vector<Segment> segment_fixed(const SignalBuffer& audio, double length_s);

}  // namespace vmic
