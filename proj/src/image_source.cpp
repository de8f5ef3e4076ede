#include "vmic/image_source.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "vmic/error.hpp"

namespace vmic {

namespace {

// Coordinate of the n-th mirror image along one axis of [lo, lo + len].
double mirror(double lo, double len, double p, int n) {
  const double rel = p - lo;
  return (n % 2 == 0) ? lo + n * len + rel : lo + (n + 1) * len - rel;
}

double hann_sinc(double u) {
  constexpr double half = kSincHalfWidth + 1;
  if (std::abs(u) >= half) return 0.0;
  const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * u / half));
  const double sinc = u == 0.0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
  return window * sinc;
}

}  // namespace

double reflection_coefficient(const RoomModel& room) {
  return std::sqrt(1.0 - room.absorption());
}

std::vector<ImageSource> enumerate_images(const RoomModel& room, const Vec3& source,
                                          const Vec3& mic) {
  const int order = room.max_order();
  const double beta = reflection_coefficient(room);
  const auto lo = room.lower();
  const auto dim = room.dimensions();

  std::vector<ImageSource> images;
  auto emit = [&](int nx, int ny, int nz) {
    ImageSource img;
    img.position = {mirror(lo.x, dim.x, source.x, nx), mirror(lo.y, dim.y, source.y, ny),
                    mirror(lo.z, dim.z, source.z, nz)};
    img.reflection_order = std::abs(nx) + std::abs(ny) + std::abs(nz);
    img.distance_to_mic = distance(img.position, mic);
    img.amplitude = std::pow(beta, img.reflection_order) /
                    (4.0 * std::numbers::pi * img.distance_to_mic);
    images.push_back(img);
  };

  emit(0, 0, 0);
  for (int nx = -order; nx <= order; ++nx) {
    const int rx = order - std::abs(nx);
    for (int ny = -rx; ny <= rx; ++ny) {
      const int rz = rx - std::abs(ny);
      for (int nz = -rz; nz <= rz; ++nz) {
        if (nx == 0 && ny == 0 && nz == 0) continue;
        emit(nx, ny, nz);
      }
    }
  }
  return images;
}

ImpulseResponse compute_rir(const RoomModel& room, const Vec3& source, const Vec3& mic,
                            std::string source_label, std::size_t mic_index) {
  const double fs = room.sample_rate();
  const double c = room.speed_of_sound();
  const auto images = enumerate_images(room, source, mic);

  double max_delay = 0.0;
  for (const auto& img : images) {
    if (img.amplitude > 0.0) max_delay = std::max(max_delay, fs * img.distance_to_mic / c);
  }
  const bool sinc = room.delay_mode() == FractionalDelay::kSinc;
  const auto margin = static_cast<std::size_t>(sinc ? kSincHalfWidth + 1 : 1);
  const auto length = static_cast<std::size_t>(std::ceil(max_delay)) + margin;

  ImpulseResponse rir{std::move(source_label), mic_index, fs, std::vector<double>(length, 0.0)};
  for (const auto& img : images) {
    if (img.amplitude == 0.0) continue;
    const double delay = fs * img.distance_to_mic / c;
    if (!sinc) {
      rir.taps[static_cast<std::size_t>(std::llround(delay))] += img.amplitude;
      continue;
    }
    const auto centre = static_cast<long long>(std::llround(delay));
    for (long long n = centre - kSincHalfWidth; n <= centre + kSincHalfWidth; ++n) {
      if (n < 0 || n >= static_cast<long long>(length)) continue;
      rir.taps[static_cast<std::size_t>(n)] += img.amplitude * hann_sinc(n - delay);
    }
  }
  return rir;
}

void write_rir_text(std::ostream& out, const ImpulseResponse& rir) {
  char buf[64];
  for (double v : rir.taps) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
    out.put('\n');
  }
}

std::vector<double> read_rir_text(std::istream& in) {
  std::vector<double> taps;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    double v = 0.0;
    const auto* begin = line.data() + line.find_first_not_of(" \t");
    const auto* end = line.data() + line.find_last_not_of(" \t\r") + 1;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
      throw InputError("RIR text line " + std::to_string(line_no) + ": not a number");
    }
    taps.push_back(v);
  }
  return taps;
}

}  // namespace vmic
