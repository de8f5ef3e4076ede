#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

namespace vmic::testing {

std::vector<double> direct_convolution(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < h.size(); ++k) y[i + k] += x[i] * h[k];
  }
  return y;
}

std::vector<std::pair<std::ptrdiff_t, double>> direct_xcorr(std::span<const double> x,
                                                            std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ex += x[i] * x[i];
    ey += y[i] * y[i];
  }
  const double norm = std::sqrt(ex * ey);
  std::vector<std::pair<std::ptrdiff_t, double>> out;
  const auto N = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t k = -(N - 1); k <= N - 1; ++k) {
    double acc = 0.0;
    for (std::ptrdiff_t i = 0; i < N; ++i) {
      const std::ptrdiff_t j = i + k;
      if (j >= 0 && j < N) acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    }
    out.emplace_back(k, acc / norm);
  }
  return out;
}

double relative_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

std::vector<double> well_conditioned_kernel(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> h(n, 0.0);
  h[0] = 1.0;
  double total = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    h[k] = u(rng) * std::exp(-3.0 * static_cast<double>(k) / static_cast<double>(n));
    total += std::abs(h[k]);
  }
  if (total > 0.0) {
    for (std::size_t k = 1; k < n; ++k) h[k] *= 0.5 / total;
  }
  return h;
}

std::vector<Vec3> mirror_images(const RoomModel& room, const Vec3& source, int max_order) {
  const Vec3 lo = room.lower();
  const Vec3 hi = room.upper();
  auto key = [](const Vec3& p) {
    return std::make_tuple(std::llround(p.x * 1e9), std::llround(p.y * 1e9),
                           std::llround(p.z * 1e9));
  };
  std::map<std::tuple<long long, long long, long long>, Vec3> seen;
  std::deque<std::pair<Vec3, int>> queue{{source, 0}};
  seen.emplace(key(source), source);
  while (!queue.empty()) {
    const auto [p, depth] = queue.front();
    queue.pop_front();
    if (depth == max_order) continue;
    for (int axis = 0; axis < 3; ++axis) {
      for (double plane : {lo[axis], hi[axis]}) {
        Vec3 q = p;
        double* coord = axis == 0 ? &q.x : axis == 1 ? &q.y : &q.z;
        *coord = 2.0 * plane - *coord;
        if (seen.emplace(key(q), q).second) queue.emplace_back(q, depth + 1);
      }
    }
  }
  std::vector<Vec3> out;
  for (const auto& [k, p] : seen) out.push_back(p);
  return out;
}

double match_image_sets(const std::vector<ImageSource>& images, std::vector<Vec3> oracle) {
  std::vector<Vec3> impl;
  for (const auto& im : images) impl.push_back(im.position);
  auto order = [](const Vec3& a, const Vec3& b) {
    auto k = [](const Vec3& p) {
      return std::make_tuple(std::llround(p.x * 1e6), std::llround(p.y * 1e6),
                             std::llround(p.z * 1e6));
    };
    return k(a) < k(b);
  };
  std::sort(impl.begin(), impl.end(), order);
  std::sort(oracle.begin(), oracle.end(), order);
  if (impl.size() != oracle.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < impl.size(); ++i) worst = std::max(worst, distance(impl[i], oracle[i]));
  return worst;
}

std::ptrdiff_t geometric_lag(const RoomModel& room, const Vec3& source, const Vec3& mic_i,
                             const Vec3& mic_j) {
  const double k = room.sample_rate() / room.speed_of_sound();
  return static_cast<std::ptrdiff_t>(std::llround(distance(source, mic_j) * k)) -
         static_cast<std::ptrdiff_t>(std::llround(distance(source, mic_i) * k));
}

namespace {

std::size_t samples(double s, double fs) { return static_cast<std::size_t>(std::llround(s * fs)); }

void split_into(std::size_t start, std::size_t len, std::size_t min_len, std::size_t max_len,
                std::size_t cap, std::vector<std::pair<std::size_t, std::size_t>>& out) {
  if (len <= cap) {
    out.emplace_back(start, start + len);
  } else if (len - max_len < min_len) {
    const std::size_t half = len / 2;
    const std::size_t first = (half >= min_len && len - half <= max_len) ? half : max_len;
    out.emplace_back(start, start + first);
    out.emplace_back(start + first, start + len);
  } else {
    out.emplace_back(start, start + max_len);
    split_into(start + max_len, len - max_len, min_len, max_len, cap, out);
  }
}

}  // namespace

std::vector<Segment> vad_reference(const SignalBuffer& audio, const VadParams& p) {
  const double fs = audio.sample_rate;
  const std::size_t n = audio.size();
  const auto y = band_limit(audio, p.band_low, p.band_high);
  const std::size_t hold = samples(p.hold, fs);

  enum class State { kIdle, kActive } state = State::kIdle;
  std::size_t t1 = 0, t2 = 0, countdown = 0;
  std::vector<std::pair<std::size_t, std::size_t>> regions;
  for (std::size_t i = 0; i < n; ++i) {
    const bool hit = std::abs(y[i]) > p.trigger;
    if (state == State::kActive) {
      if (countdown == 0) {
        // Window since the last trigger has run out.
        regions.emplace_back(t1, t2 + 1);
        state = State::kIdle;
      } else if (hit) {
        t2 = i;
        countdown = hold;
        continue;
      } else {
        --countdown;
        continue;
      }
    }
    if (hit) {
      state = State::kActive;
      t1 = t2 = i;
      countdown = hold;
    }
  }
  if (state == State::kActive) regions.emplace_back(t1, t2 + 1);

  const std::size_t pad = samples(p.pad, fs);
  for (auto& [a, b] : regions) {
    a = a >= pad ? a - pad : 0;
    b = std::min(n, b + pad);
  }
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  const std::size_t gap = samples(p.merge_gap, fs);
  for (const auto& r : regions) {
    if (!merged.empty() && r.first < merged.back().second + gap) {
      merged.back().second = std::max(merged.back().second, r.second);
    } else {
      merged.push_back(r);
    }
  }
  const std::size_t min_len = samples(p.min_len, fs);
  std::vector<std::pair<std::size_t, std::size_t>> pieces;
  for (const auto& [a, b] : merged) {
    split_into(a, b - a, min_len, samples(p.max_len, fs), samples(p.hard_cap, fs), pieces);
  }

  std::vector<Segment> out;
  std::size_t cursor = 0;
  for (const auto& [a, b] : pieces) {
    if (b - a < min_len) continue;
    if (a > cursor) out.push_back({cursor, a, SegmentKind::kNoise});
    out.push_back({a, b, SegmentKind::kSpeech});
    cursor = b;
  }
  if (cursor < n) out.push_back({cursor, n, SegmentKind::kNoise});
  return out;
}

SignalBuffer random_vad_clip(std::uint64_t seed) {
  constexpr double kFs = 16000.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double seconds = 0.6 + 18.3 * u(rng);
  const auto n = static_cast<std::size_t>(seconds * kFs);
  SignalBuffer audio{std::vector<double>(n, 0.0), kFs};
  const double floor = u(rng) < 0.2 ? 0.0 : 1e-3 * u(rng);
  for (auto& v : audio.samples) v = floor * gauss(rng);

  const int bursts = static_cast<int>(u(rng) * 12.0);
  for (int b = 0; b < bursts; ++b) {
    const auto start = static_cast<std::size_t>(u(rng) * static_cast<double>(n));
    const auto len = static_cast<std::size_t>((0.02 + 3.5 * u(rng)) * kFs);
    const double amp = 0.01 + u(rng);
    const double freq = 300.0 + 4000.0 * u(rng);
    const bool tone = u(rng) < 0.5;
    for (std::size_t i = start; i < std::min(n, start + len); ++i) {
      const double t = static_cast<double>(i) / kFs;
      audio.samples[i] += amp * (tone ? std::sin(2.0 * std::numbers::pi * freq * t) : gauss(rng));
    }
  }
  return audio;
}

int vad_violations(const SignalBuffer& audio, const VadParams& p, const std::vector<Segment>& segs) {
  const double fs = audio.sample_rate;
  const double min_len = p.min_len * fs - 1.0;
  const double max_len = p.max_len * fs + 1.0;
  const double cap = p.hard_cap * fs + 1.0;
  int bad = 0;
  if (segs.empty() || segs.front().start_sample != 0 || segs.back().end_sample != audio.size()) {
    ++bad;
  }
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs[k];
    if (s.start_sample >= s.end_sample) ++bad;
    if (k > 0 && segs[k - 1].end_sample != s.start_sample) ++bad;
    if (k > 0 && s.kind == SegmentKind::kNoise && segs[k - 1].kind == SegmentKind::kNoise) ++bad;
    if (s.kind != SegmentKind::kSpeech) continue;
    const double len = static_cast<double>(s.length());
    if (len < min_len || len > cap) ++bad;
    // Only the last piece of a run of adjacent speech may exceed max_len.
    const bool run_continues = k + 1 < segs.size() && segs[k + 1].kind == SegmentKind::kSpeech;
    if (run_continues && len > max_len) ++bad;
  }
  return bad;
}

std::size_t speech_samples(const std::vector<Segment>& segs) {
  std::size_t total = 0;
  for (const auto& s : segs) {
    if (s.kind == SegmentKind::kSpeech) total += s.length();
  }
  return total;
}

}  // namespace vmic::testing
