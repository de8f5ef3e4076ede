#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmic/segment_csv.hpp"

namespace vmic {

struct TalkTimeRow {
  std::string label;
  double true_s = 0.0;
  double estimated_s = 0.0;
  std::optional<double> percent_error;  // empty when true_s == 0
};

struct EvalReport {
  double false_alarm_s = 0.0;
  double miss_s = 0.0;
  double confusion_s = 0.0;
  double overlap_s = 0.0;  // overlapping speech is not attributed; always 0
  double correct_s = 0.0;  // both speech, same label
  double reference_length_s = 0.0;
  double der = 0.0;
  std::vector<TalkTimeRow> per_speaker;
};

enum class ReferenceLengthMode { kTimeline, kSpeech };

// DER = (FA + Miss + Overlap + Confusion) / reference length.
double diarization_error_rate(double false_alarm_s, double miss_s, double confusion_s,
                              double overlap_s, double reference_length_s);

// |estimated - true| / true * 100; empty when true_s == 0.
std::optional<double> percent_error(double estimated_s, double true_s);

// Interval arithmetic without collar. Both lists must be sorted and
// non-overlapping (InputError otherwise). Noise-labelled rows count as
// non-speech.
EvalReport compute_der(std::span<const LabeledSegment> reference,
                       std::span<const LabeledSegment> hypothesis, double reference_length_s);

// Picks the DER denominator: the given timeline length, or the total
// reference speech time.
double reference_length(std::span<const LabeledSegment> reference, ReferenceLengthMode mode,
                        double timeline_s);

// Total speech time per label.
std::map<std::string, double> talk_times(std::span<const LabeledSegment> segments);

// Rows for every label in either `truth` or the segments, sorted by label.
std::vector<TalkTimeRow> talk_time_report(std::span<const LabeledSegment> segments,
                                          const std::map<std::string, double>& truth);

void write_report_text(std::ostream& out, const EvalReport& report);
void write_talk_time_text(std::ostream& out, std::span<const TalkTimeRow> rows);
void write_talk_time_csv(std::ostream& out, std::span<const TalkTimeRow> rows);

}  // namespace vmic
