#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "vmic/error.hpp"
#include "vmic/vad.hpp"

namespace vmic {
namespace {

constexpr double kFs = 16000.0;

SignalBuffer tone_burst(double total_s, double on_s, double off_s, double hz) {
  SignalBuffer a{std::vector<double>(static_cast<std::size_t>(total_s * kFs), 0.0), kFs};
  for (std::size_t i = static_cast<std::size_t>(on_s * kFs); i < static_cast<std::size_t>(off_s * kFs);
       ++i) {
    a.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / kFs);
  }
  return a;
}

std::vector<Segment> speech_only(const std::vector<Segment>& segs) {
  std::vector<Segment> out;
  for (const auto& s : segs) {
    if (s.kind == SegmentKind::kSpeech) out.push_back(s);
  }
  return out;
}

TEST(Vad, SilenceIsOneNoiseSegment) {
  const SignalBuffer a{std::vector<double>(32000, 0.0), kFs};
  const auto segs = segment_vad(a);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0], (Segment{0, 32000, SegmentKind::kNoise}));
}

TEST(Vad, LoudOutOfBandToneDoesNotMaskQuietBurst) {
  auto a = tone_burst(2.0, 1.2, 1.6, 1500.0);
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = static_cast<double>(i);
    const double taper = std::sin(std::numbers::pi * t / n);  // no hard clip edges
    a.samples[i] = 0.1 * a.samples[i] +
                   0.5 * taper * taper * std::sin(2 * std::numbers::pi * 300.0 * t / kFs);
  }
  const auto speech = speech_only(segment_vad(a));
  ASSERT_EQ(speech.size(), 1u);
  EXPECT_NEAR(static_cast<double>(speech[0].start_sample) / kFs, 0.95, 0.01);
  EXPECT_NEAR(static_cast<double>(speech[0].end_sample) / kFs, 1.85, 0.01);
}

TEST(Vad, SingleBurstIsPaddedBothSides) {
  const auto segs = segment_vad(tone_burst(2.0, 0.4, 1.0, 1500.0));
  const auto speech = speech_only(segs);
  ASSERT_EQ(speech.size(), 1u);
  EXPECT_NEAR(static_cast<double>(speech[0].start_sample) / kFs, 0.15, 0.01);
  EXPECT_NEAR(static_cast<double>(speech[0].end_sample) / kFs, 1.25, 0.01);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs.front().kind, SegmentKind::kNoise);
  EXPECT_EQ(segs.back().end_sample, 32000u);
}

TEST(Vad, ContinuousSignalSplitsIntoBoundedPieces) {
  const auto a = SignalBuffer{testing::white_noise(64000, 0.3, 3), kFs};
  const VadParams p;
  const auto segs = segment_vad(a, p);
  EXPECT_EQ(segs, testing::vad_reference(a, p));
  EXPECT_EQ(testing::vad_violations(a, p, segs), 0);
  const auto speech = speech_only(segs);
  ASSERT_GE(speech.size(), 3u);
  for (std::size_t i = 0; i + 1 < speech.size(); ++i) {
    EXPECT_GE(speech[i].length(), static_cast<std::size_t>(p.min_len * kFs));
    EXPECT_LE(speech[i].length(), static_cast<std::size_t>(p.max_len * kFs) + 1);
  }
}

TEST(Vad, MatchesStateMachineReference) {
  const VadParams p;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto a = testing::random_vad_clip(seed);
    if (a.size() < static_cast<std::size_t>(p.min_len * kFs)) continue;
    EXPECT_EQ(segment_vad(a, p), testing::vad_reference(a, p)) << "seed " << seed;
  }
}

TEST(Vad, NonDefaultParametersMatchReference) {
  VadParams p;
  p.trigger = 0.3;
  p.hold = 0.1;
  p.pad = 0.05;
  p.merge_gap = 0.4;
  p.min_len = 0.2;
  p.max_len = 0.7;
  p.hard_cap = 1.0;
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto a = testing::random_vad_clip(seed);
    if (a.size() < static_cast<std::size_t>(p.min_len * kFs)) continue;
    const auto segs = segment_vad(a, p);
    EXPECT_EQ(segs, testing::vad_reference(a, p)) << "seed " << seed;
    EXPECT_EQ(testing::vad_violations(a, p, segs), 0) << "seed " << seed;
  }
}

TEST(Vad, TooShortInputIsRejected) {
  const SignalBuffer a{std::vector<double>(100, 0.1), kFs};
  EXPECT_THROW(segment_vad(a), InputError);
}

TEST(Vad, InvalidParametersAreRejected) {
  const SignalBuffer a{std::vector<double>(32000, 0.0), kFs};
  VadParams p;
  p.band_high = 9000.0;
  EXPECT_THROW(segment_vad(a, p), std::invalid_argument);
  p = {};
  p.band_low = 3000.0;
  p.band_high = 1000.0;
  EXPECT_THROW(segment_vad(a, p), std::invalid_argument);
  p = {};
  p.max_len = 2.0;
  EXPECT_THROW(segment_vad(a, p), std::invalid_argument);
  p = {};
  p.min_len = 1.3;
  EXPECT_THROW(segment_vad(a, p), std::invalid_argument);
  p = {};
  p.pad = -0.1;
  EXPECT_THROW(segment_vad(a, p), std::invalid_argument);
}

TEST(BandLimit, PeakNormalizedAndZeroStaysZero) {
  const auto y = band_limit(tone_burst(1.0, 0.0, 1.0, 2000.0), 1000.0, 3000.0);
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 1.0, 1e-12);
  const auto z = band_limit(SignalBuffer{std::vector<double>(500, 0.0), kFs}, 1000.0, 3000.0);
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(SegmentFixed, Examples) {
  const SignalBuffer a{std::vector<double>(80000, 0.0), kFs};  // 5 s
  auto segs = segment_fixed(a, 1.0);
  ASSERT_EQ(segs.size(), 5u);
  EXPECT_EQ(segs[4], (Segment{64000, 80000, SegmentKind::kSpeech}));

  segs = segment_fixed(a, 0.9);
  ASSERT_EQ(segs.size(), 6u);
  EXPECT_EQ(segs[5].length(), 8000u);

  segs = segment_fixed(a, 10.0);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].length(), 80000u);

  EXPECT_THROW(segment_fixed(a, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace vmic
