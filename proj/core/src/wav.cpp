#include "noisecond/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "noisecond/error.hpp"

namespace nc::wav {
namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

void wr_u16(std::ofstream& f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

dsp::Waveform read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw UnsupportedFormat(path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* tag = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t len = rd_u32(data.data() + pos + 4);
    const unsigned char* body = data.data() + pos + 8;
    if (pos + 8 + len > data.size())
      throw UnsupportedFormat(path + " has a truncated chunk");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (len < 16) throw UnsupportedFormat(path + " fmt chunk too small");
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      pcm = body;
      pcm_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (!pcm || format == 0) throw UnsupportedFormat(path + " missing fmt/data chunk");
  if (format != 1 || bits != 16)
    throw UnsupportedFormat(path + ": only 16-bit PCM is supported");
  if (channels != 1)
    throw UnsupportedFormat(path + ": only mono is supported, got " +
                            std::to_string(channels) + " channels");
  if (rate != static_cast<std::uint32_t>(dsp::kDefaultSampleRate))
    throw UnsupportedFormat(path + ": only 16 kHz is supported, got " +
                            std::to_string(rate) + " Hz (no resampling)");

  dsp::Waveform w;
  w.sample_rate = static_cast<int>(rate);
  const std::size_t n = pcm_len / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(pcm[2 * i] | (pcm[2 * i + 1] << 8));
    w.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

void write(const std::string& path, const dsp::Waveform& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(w.sample_rate);

  f.write("RIFF", 4);
  wr_u32(f, 36 + 2 * n);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, 1);   // PCM
  wr_u16(f, 1);   // mono
  wr_u32(f, rate);
  wr_u32(f, rate * 2);  // byte rate
  wr_u16(f, 2);   // block align
  wr_u16(f, 16);  // bits
  f.write("data", 4);
  wr_u32(f, 2 * n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = std::clamp(static_cast<double>(w.samples[i]), -1.0, 1.0);
    const long q = std::lround(x * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    const unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                                static_cast<unsigned char>((s >> 8) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 2);
  }
  if (!f) throw IoError("short write to " + path);
}

}  // namespace nc::wav
