#include "vmic/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "vmic/error.hpp"

namespace vmic {
namespace {

constexpr std::uint16_t kTagPcm = 1;
constexpr std::uint16_t kTagFloat = 3;
constexpr std::uint16_t kTagExtensible = 0xFFFE;

std::uint16_t u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

}  // namespace

WavReadResult read_wav(std::istream& in, const std::string& name) {
  auto fail = [&](const std::string& why) { throw InputError(name + ": " + why); };

  std::array<unsigned char, 12> riff{};
  if (!in.read(reinterpret_cast<char*>(riff.data()), riff.size()) ||
      std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::vector<unsigned char> data;
  bool have_data = false;

  while (!have_data) {
    std::array<unsigned char, 8> hdr{};
    if (!in.read(reinterpret_cast<char*>(hdr.data()), hdr.size())) break;
    const std::uint32_t size = u32(hdr.data() + 4);
    if (std::memcmp(hdr.data(), "fmt ", 4) == 0) {
      if (size < 16) fail("fmt chunk too small");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) fail("truncated fmt chunk");
      tag = u16(&fmt[0]);
      channels = u16(&fmt[2]);
      rate = u32(&fmt[4]);
      block_align = u16(&fmt[12]);
      bits = u16(&fmt[14]);
      if (tag == kTagExtensible) {
        if (size < 40) fail("extensible fmt chunk too small");
        tag = u16(&fmt[24]);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr.data(), "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      data.resize(size);
      in.read(reinterpret_cast<char*>(data.data()), size);
      data.resize(static_cast<std::size_t>(in.gcount()));
      have_data = true;
    } else {
      in.ignore(size);
    }
    if (size % 2 == 1 && !have_data) in.ignore(1);
  }
  if (!have_fmt) fail("missing fmt chunk");
  if (!have_data) fail("missing data chunk");
  if (channels == 0 || rate == 0) fail("invalid channel count or sample rate");

  WavReadResult result;
  result.channels = channels;
  if (tag == kTagPcm && bits == 16) {
    result.format = WavFormat::kPcm16;
  } else if (tag == kTagFloat && bits == 32) {
    result.format = WavFormat::kFloat32;
  } else {
    fail("unsupported encoding (need 16-bit PCM or 32-bit float), tag " + std::to_string(tag) +
         ", " + std::to_string(bits) + " bits");
  }
  const std::size_t bytes = bits / 8;
  if (block_align != bytes * channels) fail("inconsistent block alignment");

  const std::size_t frames = data.size() / block_align;
  result.audio.sample_rate = rate;
  result.audio.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const unsigned char* p = data.data() + f * block_align;  // left channel
    if (result.format == WavFormat::kPcm16) {
      result.audio.samples[f] = static_cast<std::int16_t>(u16(p)) / 32768.0;
    } else {
      const std::uint32_t raw = u32(p);
      float v;
      std::memcpy(&v, &raw, sizeof v);
      result.audio.samples[f] = v;
    }
  }
  return result;
}

WavReadResult load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_wav(in, path.string());
}

void write_wav(std::ostream& out, const SignalBuffer& audio, WavFormat format) {
  const double rounded = std::round(audio.sample_rate);
  if (rounded <= 0 || rounded != audio.sample_rate || rounded > 4294967295.0) {
    throw InputError("WAV needs a positive integer sample rate");
  }
  const std::uint32_t rate = static_cast<std::uint32_t>(rounded);
  const std::uint16_t bytes = format == WavFormat::kPcm16 ? 2 : 4;
  const std::uint64_t data_size = static_cast<std::uint64_t>(audio.size()) * bytes;
  if (data_size > 0xFFFFFFFFull - 36) throw InputError("audio too long for a WAV file");

  out.write("RIFF", 4);
  put32(out, static_cast<std::uint32_t>(36 + data_size));
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, format == WavFormat::kPcm16 ? kTagPcm : kTagFloat);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * bytes);
  put16(out, bytes);
  put16(out, static_cast<std::uint16_t>(bytes * 8));
  out.write("data", 4);
  put32(out, static_cast<std::uint32_t>(data_size));

  for (double s : audio.samples) {
    if (format == WavFormat::kPcm16) {
      const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
      put16(out, static_cast<std::uint16_t>(
                     static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
    } else {
      const float v = static_cast<float>(s);
      std::uint32_t raw;
      std::memcpy(&raw, &v, sizeof raw);
      put32(out, raw);
    }
  }
}

}  // namespace vmic
