#include "vmic/diarization.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "vmic/error.hpp"

namespace vmic {

std::vector<MicPair> mic_pairs(std::size_t num_mics) {
  std::vector<MicPair> pairs;
  for (std::size_t i = 0; i < num_mics; ++i) {
    for (std::size_t j = i + 1; j < num_mics; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// RirBank

RirBank::RirBank(std::vector<std::string> labels, std::vector<std::vector<ImpulseResponse>> rirs,
                 std::size_t reference_index, double sample_rate)
    : labels_(std::move(labels)),
      rirs_(std::move(rirs)),
      reference_index_(reference_index),
      sample_rate_(sample_rate) {
  if (labels_.size() != rirs_.size() || labels_.empty()) {
    throw InputError("RIR bank needs one RIR row per source label");
  }
  num_mics_ = rirs_.front().size();
  if (num_mics_ < 2 || reference_index_ >= num_mics_) {
    throw InputError("RIR bank needs >= 2 mics and a valid reference index");
  }
  for (const auto& row : rirs_) {
    if (row.size() != num_mics_) throw InputError("RIR bank is incomplete");
    for (const auto& rir : row) {
      if (rir.sample_rate != sample_rate_) throw InputError("RIR bank sample rates differ");
      if (rir.taps.empty()) throw InputError("empty RIR in bank");
      rir_length_ = std::max(rir_length_, rir.taps.size());
    }
  }
  for (auto& row : rirs_) {
    for (auto& rir : row) rir.taps.resize(rir_length_, 0.0);
  }
}

RirBank RirBank::build(const RoomConfig& config) {
  std::vector<std::string> labels;
  std::vector<std::vector<ImpulseResponse>> rirs;
  for (const auto& src : config.sources) {
    labels.push_back(src.label);
    auto& row = rirs.emplace_back();
    for (std::size_t m = 0; m < config.mics.mics.size(); ++m) {
      row.push_back(compute_rir(config.room, src.position, config.mics.mics[m].position,
                                src.label, m));
    }
  }
  return RirBank(std::move(labels), std::move(rirs), config.mics.reference_index,
                 config.room.sample_rate());
}

std::size_t RirBank::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw InputError("label '" + label + "' missing from RIR bank");
  return static_cast<std::size_t>(it - labels_.begin());
}

const ImpulseResponse& RirBank::at(const std::string& label, std::size_t mic) const {
  if (mic >= num_mics_) throw InputError("mic index out of range");
  return rirs_[index_of(label)][mic];
}

bool RirBank::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

// ---------------------------------------------------------------------------
// CCTable

bool CCTable::all_valid() const {
  return std::all_of(row_valid.begin(), row_valid.end(), [](bool v) { return v; });
}

std::ptrdiff_t CCTable::cell(const std::string& row, MicPair column) const {
  const auto r = std::find(rows.begin(), rows.end(), row);
  const auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) throw InputError("no such CC table cell");
  return cells[static_cast<std::size_t>(r - rows.begin())]
              [static_cast<std::size_t>(c - columns.begin())];
}

// ---------------------------------------------------------------------------
// Signal-level operations

SignalBuffer synthesize_reception(const std::map<std::string, SignalBuffer>& sources,
                                  const RirBank& bank, std::size_t mic, double noise_gain,
                                  std::uint64_t seed) {
  SignalBuffer out{{}, bank.sample_rate()};
  for (const auto& [label, clip] : sources) {
    if (!bank.contains(label)) throw InputError("source '" + label + "' missing from RIR bank");
    if (clip.sample_rate != bank.sample_rate()) {
      throw InputError("source '" + label + "' sample rate differs from the RIR bank");
    }
    if (clip.empty()) continue;
    const auto term = convolve(clip.samples, bank.at(label, mic).taps);
    if (term.size() > out.samples.size()) out.samples.resize(term.size(), 0.0);
    for (std::size_t i = 0; i < term.size(); ++i) out.samples[i] += term[i];
  }
  if (noise_gain > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_gain);
    for (auto& v : out.samples) v += gauss(rng);
  }
  return out;
}

std::map<std::string, SignalBuffer> estimate_sources(const SignalBuffer& segment,
                                                     const RirBank& bank,
                                                     std::span<const std::string> labels,
                                                     double eps) {
  if (segment.sample_rate != bank.sample_rate()) {
    throw InputError("segment sample rate differs from the RIR bank");
  }
  if (segment.size() < bank.rir_length()) {
    throw InputError("segment (" + std::to_string(segment.size()) +
                     " samples) is shorter than the reference RIRs (" +
                     std::to_string(bank.rir_length()) + ")");
  }
  std::map<std::string, SignalBuffer> out;
  for (const auto& label : labels) {
    out.emplace(label, SignalBuffer{deconvolve(std::span<const double>(segment.samples),
                                               std::span<const double>(bank.reference(label).taps),
                                               eps),
                                    segment.sample_rate});
  }
  return out;
}

std::vector<SignalBuffer> simulate_virtual_mics(const SignalBuffer& estimate, const RirBank& bank,
                                                const std::string& hypothesis) {
  if (estimate.empty()) throw InputError("empty source estimate");
  if (!bank.contains(hypothesis)) {
    throw InputError("unknown hypothesis label '" + hypothesis + "'");
  }
  std::vector<SignalBuffer> out;
  out.reserve(bank.num_mics());
  for (std::size_t m = 0; m < bank.num_mics(); ++m) {
    out.push_back({convolve(estimate.samples, bank.at(hypothesis, m).taps), estimate.sample_rate});
  }
  return out;
}

CCTable build_cc_table(const SignalBuffer& segment, const RirBank& bank,
                       std::span<const std::string> rows, double eps) {
  CCTable table;
  table.rows.assign(rows.begin(), rows.end());
  table.columns = mic_pairs(bank.num_mics());
  const auto estimates = estimate_sources(segment, bank, rows, eps);
  for (const auto& label : rows) {
    const auto mics = simulate_virtual_mics(estimates.at(label), bank, label);
    std::vector<std::vector<double>> signals;
    signals.reserve(mics.size());
    for (const auto& m : mics) signals.push_back(m.samples);
    try {
      table.cells.push_back(pairwise_peak_lags(signals, table.columns));
      table.row_valid.push_back(true);
    } catch (const NumericError&) {
      table.cells.emplace_back(table.columns.size(), 0);
      table.row_valid.push_back(false);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Training and classification

TemplateSet train_templates(const RoomConfig& config, const RirBank& bank,
                            const std::map<std::string, SignalBuffer>& clips,
                            const TrainOptions& options) {
  TemplateSet set;
  set.num_mics = bank.num_mics();
  set.sample_rate = bank.sample_rate();

  for (const auto& src : config.sources) {
    if (src.role == SourceRole::kSilent) {
      set.inactive.push_back(src.label);
      continue;
    }
    const auto it = clips.find(src.label);
    if (it == clips.end()) throw InputError("missing training clip for source '" + src.label + "'");
    const auto& clip = it->second;
    if (clip.sample_rate != bank.sample_rate()) {
      throw InputError("training clip for '" + src.label + "' has the wrong sample rate");
    }
    if (rms(clip.samples) < options.silence_rms) {
      set.inactive.push_back(src.label);
      continue;
    }
    if (clip.size() < bank.rir_length()) {
      throw InputError("training clip for '" + src.label + "' is shorter than its reference RIR");
    }
    set.labels.push_back(src.label);
    if (src.role == SourceRole::kNoise) set.noise_labels.insert(src.label);
  }
  if (set.labels.empty()) throw InputError("no active source to train");

  for (const auto& label : set.labels) {
    auto table = build_cc_table(clips.at(label), bank, set.labels, options.eps);
    if (!table.all_valid()) {
      throw NumericError("training clip for '" + label + "' produced a zero-energy estimate");
    }
    set.templates.emplace(label, std::move(table));
  }
  return set;
}

Classification classify_segment(const CCTable& observed, const TemplateSet& templates,
                                long long tolerance) {
  if (templates.labels.empty()) throw InputError("empty template set");
  if (observed.row_valid.size() != observed.rows.size() ||
      observed.cells.size() != observed.rows.size()) {
    throw InputError("malformed CC table");
  }
  Classification best;
  std::vector<long long> diffs;
  for (const auto& label : templates.labels) {
    const auto& tmpl = templates.templates.at(label);
    if (tmpl.rows != observed.rows || tmpl.columns != observed.columns) {
      throw InputError("CC table shape differs from template '" + label + "'");
    }
    long long score = 0;
    long long diff = 0;
    for (std::size_t r = 0; r < observed.rows.size(); ++r) {
      if (!observed.row_valid[r] || !tmpl.row_valid[r]) continue;
      for (std::size_t c = 0; c < observed.columns.size(); ++c) {
        const long long d = std::llabs(static_cast<long long>(observed.cells[r][c]) -
                                       static_cast<long long>(tmpl.cells[r][c]));
        diff += d;
        if (d <= tolerance) ++score;
      }
    }
    best.scores.push_back(score);
    diffs.push_back(diff);
  }

  std::size_t win = 0;
  for (std::size_t t = 1; t < best.scores.size(); ++t) {
    if (best.scores[t] > best.scores[win] ||
        (best.scores[t] == best.scores[win] && diffs[t] < diffs[win])) {
      win = t;
    }
  }
  best.score = best.scores[win];
  best.tie = std::count(best.scores.begin(), best.scores.end(), best.score) > 1;
  best.source_label = templates.labels[win];
  best.label = templates.noise_labels.count(best.source_label) ? std::string(kNoiseLabel)
                                                                : best.source_label;
  return best;
}

// ---------------------------------------------------------------------------
// Pipeline

std::vector<LabeledSegment> DiarizationResult::labeled() const {
  std::vector<LabeledSegment> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    out.push_back({static_cast<double>(s.segment.start_sample) / sample_rate,
                   static_cast<double>(s.segment.end_sample) / sample_rate, s.label, s.score});
  }
  return out;
}

DiarizationResult diarize_segments(const SignalBuffer& audio, std::span<const Segment> segments,
                                   const RirBank& bank, const TemplateSet& templates,
                                   const DiarizeOptions& options) {
  if (audio.sample_rate != bank.sample_rate()) {
    throw InputError("audio sample rate differs from the room model");
  }
  if (templates.num_mics != bank.num_mics()) {
    throw InputError("templates were trained for " + std::to_string(templates.num_mics) +
                     " mics but the room has " + std::to_string(bank.num_mics()));
  }
  for (const auto& label : templates.labels) {
    if (!bank.contains(label)) throw InputError("template label '" + label + "' not in room");
  }

  DiarizationResult result;
  result.candidates = templates.labels;
  result.sample_rate = audio.sample_rate;
  result.segments.resize(segments.size());

  auto process = [&](std::size_t i) {
    auto& out = result.segments[i];
    out.segment = segments[i];
    out.label = std::string(kNoiseLabel);
    if (segments[i].kind != SegmentKind::kSpeech) return;
    try {
      const auto first = audio.samples.begin() + static_cast<std::ptrdiff_t>(segments[i].start_sample);
      const auto last = audio.samples.begin() + static_cast<std::ptrdiff_t>(segments[i].end_sample);
      const SignalBuffer clip{std::vector<double>(first, last), audio.sample_rate};
      const auto table = build_cc_table(clip, bank, templates.labels, options.eps);
      if (!table.all_valid()) {
        out.error = "zero-energy source estimate";
        return;
      }
      const auto c = classify_segment(table, templates, options.tolerance);
      out.label = c.label;
      out.score = c.score;
      out.tie = c.tie;
      out.scores = c.scores;
      out.classified = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  unsigned workers = options.workers ? options.workers : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(segments.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < segments.size(); i = next++) process(i);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return result;
}

DiarizationResult diarize(const SignalBuffer& audio, const RirBank& bank,
                          const TemplateSet& templates, const VadParams& vad,
                          const DiarizeOptions& options) {
  const auto segments = segment_vad(audio, vad);
  return diarize_segments(audio, segments, bank, templates, options);
}

// ---------------------------------------------------------------------------
// Template file: header lines, then `template row mic_i mic_j lag` records.

void write_templates(std::ostream& out, const TemplateSet& t) {
  out << "vmic-templates 1\n";
  out << "sample_rate " << t.sample_rate << "\n";
  out << "mics " << t.num_mics << "\n";
  out << "labels";
  for (const auto& l : t.labels) out << ' ' << l;
  out << "\nnoise";
  for (const auto& l : t.noise_labels) out << ' ' << l;
  out << "\ninactive:";
  for (const auto& l : t.inactive) out << ' ' << l;
  out << '\n';
  for (const auto& label : t.labels) {
    const auto& table = t.templates.at(label);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << label << ' ' << table.rows[r] << ' ' << table.columns[c].first << ' '
            << table.columns[c].second << ' ' << table.cells[r][c] << '\n';
      }
    }
  }
}

TemplateSet read_templates(std::istream& in) {
  TemplateSet t;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw InputError("template file line " + std::to_string(line_no) + ": " + why);
  };
  auto words_of = [](const std::string& s) {
    std::istringstream ss(s);
    std::vector<std::string> w;
    for (std::string x; ss >> x;) w.push_back(x);
    return w;
  };

  bool header_seen = false;
  std::map<std::string, std::map<MicPair, std::map<std::string, std::ptrdiff_t>>> records;
  while (std::getline(in, line)) {
    ++line_no;
    auto words = words_of(line);
    if (words.empty() || words.front().front() == '#') continue;
    const auto& key = words.front();
    if (!header_seen) {
      if (key != "vmic-templates" || words.size() != 2 || words[1] != "1") {
        fail("not a template file");
      }
      header_seen = true;
    } else if (key == "sample_rate" && words.size() == 2) {
      t.sample_rate = std::stod(words[1]);
    } else if (key == "mics" && words.size() == 2) {
      t.num_mics = static_cast<std::size_t>(std::stoul(words[1]));
    } else if (key == "labels") {
      t.labels.assign(words.begin() + 1, words.end());
    } else if (key == "noise") {
      t.noise_labels.insert(words.begin() + 1, words.end());
    } else if (key == "inactive:") {
      t.inactive.assign(words.begin() + 1, words.end());
    } else if (words.size() == 5) {
      try {
        const MicPair pair{std::stoul(words[2]), std::stoul(words[3])};
        if (!records[key][pair].emplace(words[1], std::stoll(words[4])).second) {
          fail("duplicate record");
        }
      } catch (const std::logic_error&) {
        fail("malformed record");
      }
    } else {
      fail("unrecognised line");
    }
  }
  if (!header_seen) throw InputError("empty template file");
  if (t.num_mics < 2 || t.labels.empty()) throw InputError("template file lacks mics/labels");

  const auto columns = mic_pairs(t.num_mics);
  for (const auto& label : t.labels) {
    CCTable table;
    table.rows = t.labels;
    table.columns = columns;
    const auto rec = records.find(label);
    if (rec == records.end()) throw InputError("template '" + label + "' has no records");
    for (const auto& row : t.labels) {
      auto& cells = table.cells.emplace_back();
      for (const auto& col : columns) {
        const auto pit = rec->second.find(col);
        if (pit == rec->second.end() || !pit->second.count(row)) {
          throw InputError("template '" + label + "' misses row " + row + " pair " +
                           std::to_string(col.first) + "-" + std::to_string(col.second));
        }
        cells.push_back(pit->second.at(row));
      }
      table.row_valid.push_back(true);
    }
    t.templates.emplace(label, std::move(table));
  }
  return t;
}

}  // namespace vmic
