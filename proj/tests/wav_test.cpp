#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <sstream>

#include "support/synth.hpp"
#include "vmic/error.hpp"
#include "vmic/wav.hpp"

namespace vmic {
namespace {

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& s, std::uint32_t v) {
  put16(s, static_cast<std::uint16_t>(v & 0xFFFF));
  put16(s, static_cast<std::uint16_t>(v >> 16));
}

// Hand-assembled file with an optional junk chunk before fmt.
std::string make_wav(std::uint16_t tag, std::uint16_t channels, std::uint16_t bits,
                     const std::string& payload, bool extensible = false, bool junk = false) {
  std::string fmt;
  put16(fmt, extensible ? 0xFFFE : tag);
  put16(fmt, channels);
  put32(fmt, 16000);
  put32(fmt, 16000u * channels * bits / 8);
  put16(fmt, static_cast<std::uint16_t>(channels * bits / 8));
  put16(fmt, bits);
  if (extensible) {
    put16(fmt, 22);
    put16(fmt, bits);
    put32(fmt, 0x3);  // channel mask
    put16(fmt, tag);  // subformat GUID starts with the plain tag
    fmt += std::string("\x00\x00\x00\x00\x10\x00\x80\x00\x00\xAA\x00\x38\x9B\x71", 14);
  }
  std::string body = "WAVE";
  if (junk) {
    body += "LIST";
    put32(body, 3);
    body += "abc";
    body.push_back('\0');  // pad byte for odd chunk
  }
  body += "fmt ";
  put32(body, static_cast<std::uint32_t>(fmt.size()));
  body += fmt;
  body += "data";
  put32(body, static_cast<std::uint32_t>(payload.size()));
  body += payload;
  std::string out = "RIFF";
  put32(out, static_cast<std::uint32_t>(body.size()));
  return out + body;
}

WavReadResult parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_wav(in, "test.wav");
}

TEST(Wav, Float32RoundTripIsExactForFloats) {
  SignalBuffer a{testing::uniform_signal(1000, 1), 48000.0};
  for (auto& v : a.samples) v = static_cast<float>(v);
  std::stringstream io;
  write_wav(io, a, WavFormat::kFloat32);
  const auto r = parse(io.str());
  EXPECT_EQ(r.format, WavFormat::kFloat32);
  EXPECT_EQ(r.channels, 1);
  EXPECT_EQ(r.audio.sample_rate, 48000.0);
  EXPECT_EQ(r.audio.samples, a.samples);
}

TEST(Wav, Pcm16RoundTripWithinHalfStep) {
  SignalBuffer a{testing::uniform_signal(1000, 2), 16000.0};
  a.samples[0] = 1.5;  // clipped
  std::stringstream io;
  write_wav(io, a, WavFormat::kPcm16);
  const auto r = parse(io.str());
  EXPECT_EQ(r.format, WavFormat::kPcm16);
  ASSERT_EQ(r.audio.size(), a.size());
  EXPECT_NEAR(r.audio.samples[0], 32767.0 / 32768.0, 1e-12);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_NEAR(r.audio.samples[i], a.samples[i], 0.5 / 32768.0 + 1e-12);
}

TEST(Wav, StereoKeepsLeftChannel) {
  std::string payload;
  for (std::int16_t l : {1000, -2000, 3000}) {
    put16(payload, static_cast<std::uint16_t>(l));
    put16(payload, static_cast<std::uint16_t>(static_cast<std::int16_t>(-7)));
  }
  const auto r = parse(make_wav(1, 2, 16, payload, false, true));
  EXPECT_TRUE(r.dropped_channels());
  EXPECT_EQ(r.audio.samples, (std::vector<double>{1000 / 32768.0, -2000 / 32768.0, 3000 / 32768.0}));
}

TEST(Wav, ExtensibleFloat) {
  std::string payload;
  for (float v : {0.25f, -0.5f}) {
    std::uint32_t raw;
    std::memcpy(&raw, &v, sizeof raw);
    put32(payload, raw);
  }
  const auto r = parse(make_wav(3, 1, 32, payload, true));
  EXPECT_EQ(r.format, WavFormat::kFloat32);
  EXPECT_EQ(r.audio.samples, (std::vector<double>{0.25, -0.5}));
}

TEST(Wav, BadFilesAreInputErrors) {
  EXPECT_THROW(parse("not a wav file at all"), InputError);
  EXPECT_THROW(parse(make_wav(1, 1, 24, std::string(6, '\0'))), InputError);  // 24-bit
  EXPECT_THROW(parse(make_wav(6, 1, 16, std::string(4, '\0'))), InputError);  // A-law
  std::string no_data = make_wav(1, 1, 16, "");
  no_data.resize(no_data.size() - 8);
  EXPECT_THROW(parse(no_data), InputError);
  EXPECT_THROW(load_wav("/nonexistent/file.wav"), InputError);

  std::stringstream io;
  EXPECT_THROW(write_wav(io, SignalBuffer{{0.0}, 44100.5}), InputError);
}

}  // namespace
}  // namespace vmic
