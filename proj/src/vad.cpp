#include "vmic/vad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmic/error.hpp"
#include "vmic/fft.hpp"

namespace vmic {

namespace {

struct Span {
  std::size_t start;
  std::size_t end;
};

std::size_t to_samples(double seconds, double fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

// Trigger samples chained while consecutive triggers are at most `hold` apart.
std::vector<Span> triggered_regions(const std::vector<double>& y, double trigger,
                                    std::size_t hold) {
  std::vector<Span> regions;
  bool open = false;
  std::size_t first = 0, last = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) <= trigger) continue;
    if (open && i - last > hold) {
      regions.push_back({first, last + 1});
      open = false;
    }
    if (!open) {
      first = i;
      open = true;
    }
    last = i;
  }
  if (open) regions.push_back({first, last + 1});
  return regions;
}

// Pieces of one speech region: max_len chunks while the rest exceeds the
// hard cap; a remainder that would fall under min_len is avoided by halving
// the final stretch instead.
std::vector<Span> split_region(Span r, std::size_t min_len, std::size_t max_len,
                               std::size_t hard_cap) {
  std::vector<Span> pieces;
  std::size_t pos = r.start;
  while (r.end - pos > hard_cap) {
    const std::size_t rest = r.end - pos;
    if (rest - max_len < min_len) {
      const std::size_t half = rest / 2;
      if (half >= min_len && rest - half <= max_len) {
        pieces.push_back({pos, pos + half});
        pos += half;
      } else {
        pieces.push_back({pos, pos + max_len});
        pos += max_len;
      }
      break;
    }
    pieces.push_back({pos, pos + max_len});
    pos += max_len;
  }
  if (r.end > pos) pieces.push_back({pos, r.end});
  return pieces;
}

}  // namespace

void VadParams::validate(double sample_rate) const {
  if (!(band_low > 0.0 && band_low < band_high && band_high < sample_rate / 2.0)) {
    throw std::invalid_argument("VAD band must satisfy 0 < low < high < fs/2");
  }
  if (!(min_len > 0.0 && min_len <= max_len && max_len <= hard_cap)) {
    throw std::invalid_argument("VAD lengths must satisfy 0 < min_len <= max_len <= hard_cap");
  }
  if (!(trigger >= 0.0) || hold < 0.0 || pad < 0.0 || merge_gap < 0.0) {
    throw std::invalid_argument("VAD trigger/hold/pad/merge_gap must be non-negative");
  }
}

std::vector<double> band_limit(const SignalBuffer& audio, double low, double high) {
  const std::size_t n = next_pow2(audio.size());
  auto spec = rfft(audio.samples, n);
  const double bin_hz = audio.sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f < low || f > high) spec[k] = {};
  }
  auto y = irfft(spec, n);
  y.resize(audio.size());
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (auto& v : y) v /= peak;
  }
  return y;
}

std::vector<Segment> segment_vad(const SignalBuffer& audio, const VadParams& p) {
  const double fs = audio.sample_rate;
  p.validate(fs);
  const std::size_t min_len = to_samples(p.min_len, fs);
  if (audio.size() < min_len) throw InputError("audio shorter than the minimum segment length");

  const std::size_t n = audio.size();
  const auto y = band_limit(audio, p.band_low, p.band_high);
  auto regions = triggered_regions(y, p.trigger, to_samples(p.hold, fs));

  const std::size_t pad = to_samples(p.pad, fs);
  for (auto& r : regions) {
    r.start = r.start > pad ? r.start - pad : 0;
    r.end = std::min(n, r.end + pad);
  }

  const std::size_t merge_gap = to_samples(p.merge_gap, fs);
  std::vector<Span> merged;
  for (const auto& r : regions) {
    if (!merged.empty() && r.start < merged.back().end + merge_gap) {
      merged.back().end = std::max(merged.back().end, r.end);
    } else {
      merged.push_back(r);
    }
  }

  std::vector<Span> speech;
  const std::size_t max_len = to_samples(p.max_len, fs);
  const std::size_t hard_cap = to_samples(p.hard_cap, fs);
  for (const auto& r : merged) {
    for (const auto& piece : split_region(r, min_len, max_len, hard_cap)) {
      if (piece.end - piece.start >= min_len) speech.push_back(piece);
    }
  }

  std::vector<Segment> out;
  std::size_t cursor = 0;
  for (const auto& s : speech) {
    if (s.start > cursor) out.push_back({cursor, s.start, SegmentKind::kNoise});
    out.push_back({s.start, s.end, SegmentKind::kSpeech});
    cursor = s.end;
  }
  if (cursor < n) out.push_back({cursor, n, SegmentKind::kNoise});
  return out;
}

std::vector<Segment> segment_fixed(const SignalBuffer& audio, double length_s) {
  if (!(length_s > 0.0)) throw std::invalid_argument("segment length must be > 0");
  const std::size_t len = std::max<std::size_t>(1, to_samples(length_s, audio.sample_rate));
  std::vector<Segment> out;
  for (std::size_t start = 0; start < audio.size(); start += len) {
    out.push_back({start, std::min(audio.size(), start + len), SegmentKind::kSpeech});
  }
  return out;
}

}  // namespace vmic
