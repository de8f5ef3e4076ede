#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vmic/dsp.hpp"
#include "vmic/image_source.hpp"
#include "vmic/room_model.hpp"
#include "vmic/segment_csv.hpp"
#include "vmic/vad.hpp"

namespace vmic {

using MicPair = std::pair<std::size_t, std::size_t>;

// All unordered pairs (i, j), i < j, in lexicographic order.
std::vector<MicPair> mic_pairs(std::size_t num_mics);

// RIRs from every configured source to every microphone. All taps are
// zero-padded to one common length so virtual-mic signals line up.
class RirBank {
 public:
  RirBank(std::vector<std::string> labels, std::vector<std::vector<ImpulseResponse>> rirs,
          std::size_t reference_index, double sample_rate);

  static RirBank build(const RoomConfig& config);

  const ImpulseResponse& at(const std::string& label, std::size_t mic) const;
  const ImpulseResponse& reference(const std::string& label) const {
    return at(label, reference_index_);
  }
  bool contains(const std::string& label) const;

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t num_mics() const { return num_mics_; }
  std::size_t reference_index() const { return reference_index_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t rir_length() const { return rir_length_; }

 private:
  std::size_t index_of(const std::string& label) const;

  std::vector<std::string> labels_;
  std::vector<std::vector<ImpulseResponse>> rirs_;  // [source][mic]
  std::size_t num_mics_ = 0;
  std::size_t reference_index_ = 0;
  double sample_rate_ = 0.0;
  std::size_t rir_length_ = 0;
};

// Peak-lag table: one row per hypothesised source, one column per mic pair.
struct CCTable {
  std::vector<std::string> rows;
  std::vector<MicPair> columns;
  std::vector<std::vector<std::ptrdiff_t>> cells;
  std::vector<bool> row_valid;

  bool all_valid() const;
  std::ptrdiff_t cell(const std::string& row, MicPair column) const;
  friend bool operator==(const CCTable&, const CCTable&) = default;
};

struct TemplateSet {
  std::vector<std::string> labels;  // trained labels, config order
  std::map<std::string, CCTable> templates;
  std::set<std::string> noise_labels;
  std::vector<std::string> inactive;
  std::size_t num_mics = 0;
  double sample_rate = 0.0;

  friend bool operator==(const TemplateSet&, const TemplateSet&) = default;
};

// Clip RMS below this marks a source as silent during training.
inline constexpr double kDefaultSilenceRms = 1e-4;

// Σ_j s_j * h_{j,mic} plus white noise of standard deviation noise_gain,
// trimmed to the longest convolved term.
SignalBuffer synthesize_reception(const std::map<std::string, SignalBuffer>& sources,
                                  const RirBank& bank, std::size_t mic, double noise_gain = 0.0,
                                  std::uint64_t seed = 0);

// Per hypothesis: deconvolve the reference-mic segment with that source's
// reference RIR.
std::map<std::string, SignalBuffer> estimate_sources(const SignalBuffer& segment,
                                                     const RirBank& bank,
                                                     std::span<const std::string> labels,
                                                     double eps = kDefaultDeconvolutionEps);

// estimate * h_{hypothesis,m} for every mic m, ordered by mic index.
std::vector<SignalBuffer> simulate_virtual_mics(const SignalBuffer& estimate, const RirBank& bank,
                                                const std::string& hypothesis);

// Rows whose estimate has zero energy are flagged invalid with zero cells.
CCTable build_cc_table(const SignalBuffer& segment, const RirBank& bank,
                       std::span<const std::string> rows,
                       double eps = kDefaultDeconvolutionEps);

struct TrainOptions {
  double eps = kDefaultDeconvolutionEps;
  double silence_rms = kDefaultSilenceRms;
};

// `clips` needs one entry per non-silent configured source. Sources with role
// silent, or whose clip is below the silence RMS, become inactive.
TemplateSet train_templates(const RoomConfig& config, const RirBank& bank,
                            const std::map<std::string, SignalBuffer>& clips,
                            const TrainOptions& options = {});

struct Classification {
  std::string source_label;  // winning template
  std::string label;         // source label, or "noise" for noise-role winners
  long long score = 0;
  bool tie = false;
  std::vector<long long> scores;  // per TemplateSet::labels entry
};

// Match count per template: cells with |observed - template| <= tolerance.
// Ties go to the smaller total |difference|, then the earlier label.
Classification classify_segment(const CCTable& observed, const TemplateSet& templates,
                                long long tolerance = 0);

struct DiarizeOptions {
  double eps = kDefaultDeconvolutionEps;
  long long tolerance = 0;
  unsigned workers = 0;  // 0: hardware concurrency
};

struct DiarizedSegment {
  Segment segment;
  std::string label;
  long long score = 0;
  bool tie = false;
  bool classified = false;  // false for VAD noise and failed segments
  std::vector<long long> scores;
  std::string error;
};

struct DiarizationResult {
  std::vector<std::string> candidates;  // TemplateSet::labels
  std::vector<DiarizedSegment> segments;
  double sample_rate = 0.0;

  std::vector<LabeledSegment> labeled() const;
};

DiarizationResult diarize(const SignalBuffer& audio, const RirBank& bank,
                          const TemplateSet& templates, const VadParams& vad,
                          const DiarizeOptions& options = {});

// Same pipeline over caller-supplied segments (e.g. fixed-length ones).
DiarizationResult diarize_segments(const SignalBuffer& audio, std::span<const Segment> segments,
                                   const RirBank& bank, const TemplateSet& templates,
                                   const DiarizeOptions& options = {});

void write_templates(std::ostream& out, const TemplateSet& templates);
TemplateSet read_templates(std::istream& in);

}  // namespace vmic
