#include "vmic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include "vmic/error.hpp"

namespace vmic {

namespace {

void require_sorted(std::span<const LabeledSegment> segs, const char* what) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].end_s < segs[i].start_s) {
      throw InputError(std::string(what) + " row " + std::to_string(i + 1) + " ends before start");
    }
    if (i > 0 && segs[i].start_s < segs[i - 1].end_s) {
      throw InputError(std::string(what) + " rows " + std::to_string(i) + "-" +
                       std::to_string(i + 1) + " are unsorted or overlapping");
    }
  }
}

// Speech label active over [t, next boundary), or nullptr.
class Cursor {
 public:
  explicit Cursor(std::span<const LabeledSegment> segs) : segs_(segs) {}

  const std::string* label_at(double t) {
    while (pos_ < segs_.size() && segs_[pos_].end_s <= t) ++pos_;
    if (pos_ < segs_.size() && segs_[pos_].start_s <= t && is_speech_label(segs_[pos_].label)) {
      return &segs_[pos_].label;
    }
    return nullptr;
  }

 private:
  std::span<const LabeledSegment> segs_;
  std::size_t pos_ = 0;
};

}  // namespace

double diarization_error_rate(double false_alarm_s, double miss_s, double confusion_s,
                              double overlap_s, double reference_length_s) {
  if (!(reference_length_s > 0.0)) throw InputError("reference length must be > 0");
  return (false_alarm_s + miss_s + overlap_s + confusion_s) / reference_length_s;
}

std::optional<double> percent_error(double estimated_s, double true_s) {
  if (true_s == 0.0) return std::nullopt;
  return std::abs(estimated_s - true_s) / true_s * 100.0;
}

EvalReport compute_der(std::span<const LabeledSegment> reference,
                       std::span<const LabeledSegment> hypothesis, double reference_length_s) {
  require_sorted(reference, "reference");
  require_sorted(hypothesis, "hypothesis");

  std::vector<double> bounds;
  for (const auto* list : {&reference, &hypothesis}) {
    for (const auto& s : *list) {
      bounds.push_back(s.start_s);
      bounds.push_back(s.end_s);
    }
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  EvalReport report;
  Cursor ref_cursor(reference);
  Cursor hyp_cursor(hypothesis);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const double t = bounds[i];
    const double width = bounds[i + 1] - t;
    const auto* ref = ref_cursor.label_at(t);
    const auto* hyp = hyp_cursor.label_at(t);
    if (ref && hyp) {
      (*ref == *hyp ? report.correct_s : report.confusion_s) += width;
    } else if (ref) {
      report.miss_s += width;
    } else if (hyp) {
      report.false_alarm_s += width;
    }
  }
  report.reference_length_s = reference_length_s;
  report.der = diarization_error_rate(report.false_alarm_s, report.miss_s, report.confusion_s,
                                      report.overlap_s, reference_length_s);
  report.per_speaker = talk_time_report(hypothesis, talk_times(reference));
  return report;
}

double reference_length(std::span<const LabeledSegment> reference, ReferenceLengthMode mode,
                        double timeline_s) {
  if (mode == ReferenceLengthMode::kTimeline) return timeline_s;
  double total = 0.0;
  for (const auto& s : reference) {
    if (is_speech_label(s.label)) total += s.duration();
  }
  return total;
}

std::map<std::string, double> talk_times(std::span<const LabeledSegment> segments) {
  std::map<std::string, double> out;
  for (const auto& s : segments) {
    if (is_speech_label(s.label)) out[s.label] += s.duration();
  }
  return out;
}

std::vector<TalkTimeRow> talk_time_report(std::span<const LabeledSegment> segments,
                                          const std::map<std::string, double>& truth) {
  const auto estimated = talk_times(segments);
  std::set<std::string> labels;
  for (const auto& [label, t] : truth) {
    if (is_speech_label(label)) labels.insert(label);
  }
  for (const auto& [label, t] : estimated) labels.insert(label);

  std::vector<TalkTimeRow> rows;
  for (const auto& label : labels) {
    TalkTimeRow row;
    row.label = label;
    if (auto it = truth.find(label); it != truth.end()) row.true_s = it->second;
    if (auto it = estimated.find(label); it != estimated.end()) row.estimated_s = it->second;
    row.percent_error = percent_error(row.estimated_s, row.true_s);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_talk_time_text(std::ostream& out, std::span<const TalkTimeRow> rows) {
  out << std::left << std::setw(12) << "speaker" << std::right << std::setw(12) << "true (s)"
      << std::setw(12) << "est. (s)" << std::setw(12) << "error %" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.label << std::right << std::setw(12) << r.true_s
        << std::setw(12) << r.estimated_s << std::setw(12);
    if (r.percent_error) {
      out << *r.percent_error;
    } else {
      out << "n/a";
    }
    out << '\n';
  }
}

void write_talk_time_csv(std::ostream& out, std::span<const TalkTimeRow> rows) {
  out << "label,true_s,est_s,pct_err\n" << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << r.label << ',' << r.true_s << ',' << r.estimated_s << ',';
    if (r.percent_error) {
      out << *r.percent_error;
    } else {
      out << "n/a";
    }
    out << '\n';
  }
}

void write_report_text(std::ostream& out, const EvalReport& report) {
  out << std::fixed << std::setprecision(3);
  out << "false alarm (s)       " << std::setw(10) << report.false_alarm_s << '\n'
      << "miss (s)              " << std::setw(10) << report.miss_s << '\n'
      << "confusion (s)         " << std::setw(10) << report.confusion_s << '\n'
      << "overlap (s)           " << std::setw(10) << report.overlap_s << '\n'
      << "reference length (s)  " << std::setw(10) << report.reference_length_s << '\n'
      << "DER                   " << std::setw(10) << report.der << "\n\n";
  write_talk_time_text(out, report.per_speaker);
}

}  // namespace vmic
