#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmic/diarization.hpp"
#include "vmic/error.hpp"
#include "vmic/evaluation.hpp"
#include "vmic/image_source.hpp"
#include "vmic/room_model.hpp"
#include "vmic/segment_csv.hpp"
#include "vmic/vad.hpp"
#include "vmic/wav.hpp"

namespace vmic::cli {
namespace {

namespace fs = std::filesystem;

// Usage problems detected after CLI11 parsing (bad flag combinations).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temp file, then renames over the target.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw InputError("output directory does not exist: " + parent.string());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    fill(out);
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw InputError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

SignalBuffer load_audio(const std::string& path, std::ostream& err) {
  auto wav = load_wav(path);
  if (wav.dropped_channels()) {
    err << "warning: " << path << " has " << wav.channels
        << " channels; using the left channel only\n";
  }
  return std::move(wav.audio);
}

// "LABEL=path" pairs.
std::map<std::string, std::string> parse_assignments(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw UsageError("expected LABEL=PATH, got '" + item + "'");
    }
    if (!out.emplace(item.substr(0, eq), item.substr(eq + 1)).second) {
      throw UsageError("label given twice: " + item.substr(0, eq));
    }
  }
  return out;
}

struct ScheduleItem {
  double start_s = 0.0;
  std::string label;
};

std::vector<ScheduleItem> load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<ScheduleItem> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line.compare(first, 5, "start") == 0) continue;
    const auto comma = line.find(',');
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    if (comma == std::string::npos) throw InputError(where + "expected start_s,label");
    ScheduleItem item;
    try {
      std::size_t used = 0;
      const auto field = line.substr(0, comma);
      item.start_s = std::stod(field, &used);
      if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw InputError(where + "bad start time");
    }
    item.label = line.substr(comma + 1);
    item.label.erase(0, item.label.find_first_not_of(" \t"));
    item.label.erase(item.label.find_last_not_of(" \t") + 1);
    if (!(item.start_s >= 0.0) || item.label.empty()) {
      throw InputError(where + "start must be >= 0 and label non-empty");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::string format_fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string room;
  std::vector<std::string> audio;
  std::string schedule;
  std::string out;
  std::string truth;
  std::string rir_dir;
  double noise_gain = 0.0;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::string format = "float32";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto config = load_room_config(a.room);
  for (const auto& w : validate_geometry(config, config.room.sample_rate() / 2.0)) {
    if (w.kind == GeometryWarning::Kind::kSourceAwayFromWall) continue;
    err << "warning: " << w.message << '\n';
  }
  const auto bank = RirBank::build(config);
  const double fs = bank.sample_rate();
  const auto paths = parse_assignments(a.audio);
  const auto schedule = load_schedule(a.schedule);

  std::map<std::string, SignalBuffer> clips;
  for (const auto& [label, path] : paths) {
    if (!bank.contains(label)) throw InputError("--audio names unknown source '" + label + "'");
    auto clip = load_audio(path, err);
    if (clip.sample_rate != fs) {
      throw InputError(path + ": sample rate " + format_fixed(clip.sample_rate, 0) +
                       " Hz differs from the room's " + format_fixed(fs, 0) + " Hz");
    }
    clips.emplace(label, std::move(clip));
  }

  std::size_t total = static_cast<std::size_t>(std::llround(a.duration * fs));
  std::vector<LabeledSegment> speech;
  for (const auto& item : schedule) {
    if (!bank.contains(item.label)) {
      throw InputError("schedule references unknown label '" + item.label + "'");
    }
    const auto clip = clips.find(item.label);
    if (clip == clips.end()) throw InputError("no --audio clip for scheduled '" + item.label + "'");
    const auto offset = static_cast<std::size_t>(std::llround(item.start_s * fs));
    total = std::max(total, offset + clip->second.size() + bank.rir_length() - 1);
    if (config.source(item.label).role == SourceRole::kSpeaker) {
      speech.push_back({static_cast<double>(offset) / fs,
                        static_cast<double>(offset + clip->second.size()) / fs, item.label, {}});
    }
  }
  std::sort(speech.begin(), speech.end(),
            [](const auto& x, const auto& y) { return x.start_s < y.start_s; });
  for (std::size_t i = 1; i < speech.size(); ++i) {
    if (speech[i].start_s < speech[i - 1].end_s) {
      throw InputError("scheduled speech overlaps (" + speech[i - 1].label + " and " +
                       speech[i].label + "); overlapping talkers are not supported");
    }
  }

  SignalBuffer mix{std::vector<double>(total, 0.0), fs};
  const std::size_t ref = bank.reference_index();
  for (const auto& item : schedule) {
    const auto& clip = clips.at(item.label);
    const auto offset = static_cast<std::size_t>(std::llround(item.start_s * fs));
    const auto term = convolve(clip.samples, bank.at(item.label, ref).taps);
    for (std::size_t i = 0; i < term.size(); ++i) mix.samples[offset + i] += term[i];
  }
  if (a.noise_gain > 0.0) {
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> gauss(0.0, a.noise_gain);
    for (auto& v : mix.samples) v += gauss(rng);
  }

  // Truth covers the whole timeline; gaps are noise.
  std::vector<LabeledSegment> truth;
  const double end_s = static_cast<double>(total) / fs;
  double cursor = 0.0;
  for (const auto& s : speech) {
    if (s.start_s > cursor) truth.push_back({cursor, s.start_s, std::string(kNoiseLabel), {}});
    truth.push_back(s);
    cursor = s.end_s;
  }
  if (end_s > cursor) truth.push_back({cursor, end_s, std::string(kNoiseLabel), {}});

  const auto format = a.format == "pcm16" ? WavFormat::kPcm16 : WavFormat::kFloat32;
  write_atomic(a.out, [&](std::ostream& o) { write_wav(o, mix, format); });
  if (!a.truth.empty()) {
    write_atomic(a.truth, [&](std::ostream& o) { write_segment_csv(o, truth); });
  }
  if (!a.rir_dir.empty()) {
    if (!fs::is_directory(a.rir_dir)) throw InputError("no such directory: " + a.rir_dir);
    for (const auto& label : bank.labels()) {
      for (std::size_t m = 0; m < bank.num_mics(); ++m) {
        const auto name = "rir_" + label + "_" + config.mics.mics[m].label + ".txt";
        write_atomic(fs::path(a.rir_dir) / name,
                     [&](std::ostream& o) { write_rir_text(o, bank.at(label, m)); });
      }
    }
  }
  out << "wrote " << a.out << ": " << total << " samples at " << format_fixed(fs, 0) << " Hz, "
      << speech.size() << " speech segments\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string room;
  std::vector<std::string> audio;
  std::string out;
  double eps = kDefaultDeconvolutionEps;
  double silence_rms = kDefaultSilenceRms;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto config = load_room_config(a.room);
  const auto bank = RirBank::build(config);
  std::map<std::string, SignalBuffer> clips;
  for (const auto& [label, path] : parse_assignments(a.audio)) {
    if (!bank.contains(label)) throw InputError("--audio names unknown source '" + label + "'");
    clips.emplace(label, load_audio(path, err));
  }
  const auto templates = train_templates(config, bank, clips, {a.eps, a.silence_rms});
  write_atomic(a.out, [&](std::ostream& o) { write_templates(o, templates); });

  for (const auto& src : config.sources) {
    const bool active = std::find(templates.labels.begin(), templates.labels.end(), src.label) !=
                        templates.labels.end();
    out << src.label << '\t' << to_string(src.role) << '\t' << (active ? "active" : "inactive")
        << '\n';
  }
  out << templates.labels.size() << " active, " << templates.inactive.size() << " inactive\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct DiarizeArgs {
  std::string room;
  std::string templates;
  std::string audio;
  std::string out;
  std::string log;
  std::string truth;
  std::string talk_csv;
  double eps = kDefaultDeconvolutionEps;
  long long tolerance = 0;
  std::optional<double> vad_trigger;
  std::optional<double> max_seg;
  std::optional<double> min_seg;
  std::optional<double> hard_cap;
  unsigned workers = 0;
};

VadParams vad_from(const DiarizeArgs& a) {
  VadParams p;
  if (a.vad_trigger) p.trigger = *a.vad_trigger;
  if (a.min_seg) p.min_len = *a.min_seg;
  if (a.max_seg) {
    // Keep the default cap-to-length ratio unless the cap is given.
    p.hard_cap = std::max(p.hard_cap, *a.max_seg * (p.hard_cap / p.max_len));
    p.max_len = *a.max_seg;
  }
  if (a.hard_cap) p.hard_cap = *a.hard_cap;
  return p;
}

int cmd_diarize(const DiarizeArgs& a, std::ostream& out, std::ostream& err) {
  const auto config = load_room_config(a.room);
  const auto bank = RirBank::build(config);
  TemplateSet templates;
  {
    std::ifstream in(a.templates);
    if (!in) throw InputError("cannot open " + a.templates);
    templates = read_templates(in);
  }
  if (templates.num_mics != bank.num_mics()) {
    throw InputError("templates were trained for " + std::to_string(templates.num_mics) +
                     " mics but " + a.room + " has " + std::to_string(bank.num_mics()));
  }
  const auto audio = load_audio(a.audio, err);
  if (audio.sample_rate != bank.sample_rate()) {
    throw InputError(a.audio + ": sample rate " + format_fixed(audio.sample_rate, 0) +
                     " Hz differs from the room's " + format_fixed(bank.sample_rate(), 0) + " Hz");
  }
  const VadParams vad = vad_from(a);
  try {
    vad.validate(audio.sample_rate);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto result = diarize(audio, bank, templates, vad, {a.eps, a.tolerance, a.workers});
  const auto labeled = result.labeled();
  write_atomic(a.out, [&](std::ostream& o) { write_segment_csv(o, labeled); });

  if (!a.log.empty()) {
    write_atomic(a.log, [&](std::ostream& o) {
      for (const auto& s : result.segments) {
        nlohmann::json rec;
        rec["start_s"] = static_cast<double>(s.segment.start_sample) / result.sample_rate;
        rec["end_s"] = static_cast<double>(s.segment.end_sample) / result.sample_rate;
        rec["kind"] = s.segment.kind == SegmentKind::kSpeech ? "speech" : "noise";
        rec["label"] = s.label;
        rec["classified"] = s.classified;
        rec["score"] = s.score;
        rec["tie"] = s.tie;
        nlohmann::json scores = nlohmann::json::object();
        for (std::size_t i = 0; i < s.scores.size(); ++i) scores[result.candidates[i]] = s.scores[i];
        rec["scores"] = scores;
        if (!s.error.empty()) rec["error"] = s.error;
        o << rec.dump() << '\n';
      }
    });
  }
  for (const auto& s : result.segments) {
    if (!s.error.empty()) {
      err << "warning: segment at " << format_fixed(s.segment.start_sample / result.sample_rate, 3)
          << " s labelled noise: " << s.error << '\n';
    }
  }

  std::map<std::string, double> truth;
  if (!a.truth.empty()) truth = talk_times(load_segment_csv(a.truth));
  const auto rows = talk_time_report(labeled, truth);
  write_talk_time_text(out, rows);
  if (!a.talk_csv.empty()) {
    write_atomic(a.talk_csv, [&](std::ostream& o) { write_talk_time_csv(o, rows); });
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string reference;
  std::string hypothesis;
  std::string mode = "timeline";
  std::optional<double> ref_length;
  std::string out;
  std::string talk_csv;
};

double timeline_end(std::span<const LabeledSegment> a, std::span<const LabeledSegment> b) {
  double end = 0.0;
  for (const auto& s : a) end = std::max(end, s.end_s);
  for (const auto& s : b) end = std::max(end, s.end_s);
  return end;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto reference = load_segment_csv(a.reference);
  const auto hypothesis = load_segment_csv(a.hypothesis);
  const auto mode = a.mode == "speech" ? ReferenceLengthMode::kSpeech : ReferenceLengthMode::kTimeline;
  const double timeline = a.ref_length ? *a.ref_length : timeline_end(reference, hypothesis);
  auto report = compute_der(reference, hypothesis, reference_length(reference, mode, timeline));
  report.per_speaker = talk_time_report(hypothesis, talk_times(reference));

  write_report_text(out, report);
  if (!a.out.empty()) write_atomic(a.out, [&](std::ostream& o) { write_report_text(o, report); });
  if (!a.talk_csv.empty()) {
    write_atomic(a.talk_csv, [&](std::ostream& o) { write_talk_time_csv(o, report.per_speaker); });
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string segments;
  std::string truth;
  std::string talk_csv;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto segments = load_segment_csv(a.segments);
  std::map<std::string, double> truth;
  if (!a.truth.empty()) truth = talk_times(load_segment_csv(a.truth));
  const auto rows = talk_time_report(segments, truth);
  write_talk_time_text(out, rows);
  if (!a.talk_csv.empty()) {
    write_atomic(a.talk_csv, [&](std::ostream& o) { write_talk_time_csv(o, rows); });
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual-microphone speaker diarization toolkit", "vmic"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Render a scheduled program at the reference mic");
  simulate->add_option("--room", sim.room, "Room configuration")->required();
  simulate->add_option("--audio", sim.audio, "Source clip as LABEL=PATH (repeatable)");
  simulate->add_option("--schedule", sim.schedule, "CSV of start_s,label")->required();
  simulate->add_option("--out", sim.out, "Output WAV")->required();
  simulate->add_option("--truth", sim.truth, "Ground-truth segment CSV");
  simulate->add_option("--rir-dir", sim.rir_dir, "Directory for per-(source, mic) RIR text files");
  simulate->add_option("--noise-gain", sim.noise_gain, "White-noise standard deviation")->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed, "Noise seed");
  simulate->add_option("--duration", sim.duration, "Minimum output length in seconds")->check(CLI::NonNegativeNumber);
  simulate->add_option("--format", sim.format, "WAV encoding")->check(CLI::IsMember({"pcm16", "float32"}));

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Build CC templates from per-source clips");
  train->add_option("--room", tr.room, "Room configuration")->required();
  train->add_option("--audio", tr.audio, "Training clip as LABEL=PATH (repeatable)");
  train->add_option("--out", tr.out, "Template file")->required();
  train->add_option("--eps", tr.eps, "Deconvolution regularization")->check(CLI::NonNegativeNumber);
  train->add_option("--silence-rms", tr.silence_rms, "RMS below which a clip counts as silence")->check(CLI::NonNegativeNumber);

  DiarizeArgs di;
  auto* diar = app.add_subcommand("diarize", "Label the segments of a reference-mic recording");
  diar->add_option("--room", di.room, "Room configuration")->required();
  diar->add_option("--templates", di.templates, "Template file")->required();
  diar->add_option("--audio", di.audio, "Reference-mic WAV")->required();
  diar->add_option("--out", di.out, "Labeled segment CSV")->required();
  diar->add_option("--log", di.log, "JSON-lines record per segment");
  diar->add_option("--truth", di.truth, "Ground-truth CSV for the talk-time table");
  diar->add_option("--talk-csv", di.talk_csv, "Talk-time table as CSV");
  diar->add_option("--eps", di.eps, "Deconvolution regularization")->check(CLI::NonNegativeNumber);
  diar->add_option("--tolerance", di.tolerance, "Lag match tolerance in samples")->check(CLI::NonNegativeNumber);
  diar->add_option("--vad-trigger", di.vad_trigger, "Trigger level relative to the band peak")->check(CLI::Range(0.0, 1.0));
  diar->add_option("--max-seg", di.max_seg, "Target maximum segment length (s)")->check(CLI::PositiveNumber);
  diar->add_option("--min-seg", di.min_seg, "Minimum segment length (s)")->check(CLI::PositiveNumber);
  diar->add_option("--hard-cap", di.hard_cap, "Absolute segment length cap (s)")->check(CLI::PositiveNumber);
  diar->add_option("--workers", di.workers, "Worker threads (0: all cores)");

  EvaluateArgs ev;
  auto* eval = app.add_subcommand("evaluate", "Score a hypothesis CSV against a reference CSV");
  eval->add_option("--reference", ev.reference, "Reference segment CSV")->required();
  eval->add_option("--hypothesis", ev.hypothesis, "Hypothesis segment CSV")->required();
  eval->add_option("--ref-length-mode", ev.mode, "DER denominator")->check(CLI::IsMember({"timeline", "speech"}));
  eval->add_option("--ref-length", ev.ref_length, "Timeline length in seconds (default: last segment end)")->check(CLI::PositiveNumber);
  eval->add_option("--out", ev.out, "Write the report here too");
  eval->add_option("--talk-csv", ev.talk_csv, "Per-speaker talk time as CSV");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Per-speaker talk time of a segment CSV");
  report->add_option("--segments", rep.segments, "Labeled segment CSV")->required();
  report->add_option("--truth", rep.truth, "Ground-truth CSV");
  report->add_option("--talk-csv", rep.talk_csv, "Write the table as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*train) return cmd_train(tr, out, err);
    if (*diar) return cmd_diarize(di, out, err);
    if (*eval) return cmd_evaluate(ev, out);
    if (*report) return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}

}  // namespace vmic::cli
