#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vmic {

inline constexpr std::string_view kNoiseLabel = "noise";

// One row of the segment CSV: `start_s,end_s,label[,score]`.
struct LabeledSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
  std::optional<long long> score;

  double duration() const { return end_s - start_s; }
  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

// Anything but the noise/silence labels counts as speech.
bool is_speech_label(std::string_view label);

// Optional header row and '#' comments are skipped. Malformed rows raise
// InputError with `source_name:line`.
std::vector<LabeledSegment> read_segment_csv(std::istream& in,
                                             const std::string& source_name = "<csv>");
std::vector<LabeledSegment> load_segment_csv(const std::string& path);

// Times with 3 decimals; score column written only when any row has one.
void write_segment_csv(std::ostream& out, std::span<const LabeledSegment> segments);

}  // namespace vmic
