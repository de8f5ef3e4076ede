#include "closed_loop.hpp"

#include <algorithm>
#include <random>

#include "synth.hpp"

namespace vmic::testing {
namespace {

void add_at(std::vector<double>& dst, const std::vector<double>& src, std::size_t offset) {
  if (dst.size() < offset + src.size()) dst.resize(offset + src.size(), 0.0);
  for (std::size_t i = 0; i < src.size(); ++i) dst[offset + i] += src[i];
}

std::vector<double> noise_bed(const RoomConfig& config, const RirBank& bank, std::size_t n,
                              double rms_level, std::uint64_t seed) {
  std::vector<double> bed(n, 0.0);
  const auto ref = bank.reference_index();
  for (const auto& src : config.sources) {
    if (src.role != SourceRole::kNoise) continue;
    const auto noise = white_noise(n, rms_level, seed++);
    auto rx = convolve(noise, bank.at(src.label, ref).taps);
    rx.resize(n);
    for (std::size_t i = 0; i < n; ++i) bed[i] += rx[i];
  }
  return bed;
}

}  // namespace

Program make_program(const RoomConfig& config, const RirBank& bank, const ProgramOptions& o) {
  const double fs = bank.sample_rate();
  const auto ref = bank.reference_index();
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> turn(o.min_turn_s, o.max_turn_s);
  std::uniform_real_distribution<double> gap(o.min_gap_s, o.max_gap_s);

  std::vector<std::string> speakers;
  std::map<std::string, Voice> voices;
  for (std::size_t i = 0; i < config.sources.size(); ++i) {
    const auto& src = config.sources[i];
    if (src.role != SourceRole::kSpeaker) continue;
    speakers.push_back(src.label);
    voices.emplace(src.label, make_voice(o.seed * 1000 + i));
  }

  Program p;
  std::uint64_t utter_seed = o.seed * 100000;
  const auto clip_n = static_cast<std::size_t>(o.train_clip_s * fs);
  for (const auto& src : config.sources) {
    std::vector<double> rx;
    if (src.role == SourceRole::kSpeaker) {
      rx = convolve(utterance(o.train_clip_s, voices.at(src.label), ++utter_seed, fs),
                    bank.at(src.label, ref).taps);
      rx.resize(clip_n);
      const auto bed = noise_bed(config, bank, clip_n, o.noise_rms, ++utter_seed);
      for (std::size_t i = 0; i < clip_n; ++i) rx[i] += bed[i];
    } else if (src.role == SourceRole::kNoise) {
      auto noise = white_noise(clip_n, o.noise_rms, ++utter_seed);
      rx = convolve(noise, bank.at(src.label, ref).taps);
      rx.resize(clip_n);
    } else {
      rx.assign(clip_n, 0.0);
    }
    p.training.emplace(src.label, SignalBuffer{std::move(rx), fs});
  }

  std::vector<double> mix;
  double t = gap(rng);
  std::vector<std::string> order = speakers;
  std::size_t next = order.size();
  while (t < o.min_duration_s) {
    if (next == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      next = 0;
    }
    const auto& label = order[next++];
    const double len = turn(rng);
    const auto offset = static_cast<std::size_t>(t * fs);
    const auto dry = utterance(len, voices.at(label), ++utter_seed, fs);
    add_at(mix, convolve(dry, bank.at(label, ref).taps), offset);
    p.truth.push_back({static_cast<double>(offset) / fs,
                       static_cast<double>(offset + dry.size()) / fs, label, {}});
    t = p.truth.back().end_s + gap(rng);
  }
  mix.resize(std::max(mix.size(), static_cast<std::size_t>(t * fs)), 0.0);
  const auto bed = noise_bed(config, bank, mix.size(), o.noise_rms, ++utter_seed);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += bed[i];

  p.recording = {std::move(mix), fs};
  p.duration_s = p.recording.duration();
  return p;
}

SegmentScore score_segments(const DiarizationResult& result,
                            const std::vector<LabeledSegment>& truth) {
  SegmentScore score;
  for (const auto& s : result.segments) {
    if (s.segment.kind != SegmentKind::kSpeech) continue;
    const double a = s.segment.start_sample / result.sample_rate;
    const double b = s.segment.end_sample / result.sample_rate;
    std::map<std::string, double> cover;
    for (const auto& t : truth) {
      const double overlap = std::min(b, t.end_s) - std::max(a, t.start_s);
      if (overlap > 0.0) cover[t.label] += overlap;
    }
    std::string expected(kNoiseLabel);
    double best = 0.5 * (b - a);
    for (const auto& [label, secs] : cover) {
      if (secs > best) {
        best = secs;
        expected = label;
      }
    }
    ++score.speech_segments;
    if (s.label == expected) ++score.correct;
  }
  return score;
}

}  // namespace vmic::testing
