// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "lse/common.hpp"

namespace lse {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

WavData wav_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_arg(in.good(), "wav_read: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  check_arg(bytes.size() >= 44, "wav_read: " + path + " is too short to be a RIFF/WAVE file");
  check_arg(std::memcmp(bytes.data(), "RIFF", 4) == 0,
            "wav_read: " + path + " has no RIFF signature");
  check_arg(std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
            "wav_read: " + path + " has no WAVE signature");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::size_t data_offset = 0, data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    check_arg(body + size <= bytes.size(),
              "wav_read: " + path + " chunk '" + std::string(id, 4) + "' overruns the file");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      check_arg(size >= 16, "wav_read: fmt chunk too small");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_offset = body;
      data_size = size;
    }
    pos = body + size + (size % 2);  // chunks are word-aligned
  }
  check_arg(have_fmt, "wav_read: " + path + " has no fmt chunk");
  check_arg(data_offset != 0, "wav_read: " + path + " has no data chunk");
  check_arg(format == 1, "wav_read: unsupported format tag " + std::to_string(format) +
                             " (only PCM is supported)");
  check_arg(channels == 1, "wav_read: unsupported channel count " + std::to_string(channels) +
                               " (only mono is supported)");
  check_arg(bits == 16, "wav_read: unsupported bit depth " + std::to_string(bits) +
                            " (only 16-bit is supported)");
  check_arg(data_size % 2 == 0, "wav_read: odd data chunk size");

  const std::size_t n = data_size / 2;
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t raw = read_u16(bytes.data() + data_offset + 2 * i);
    samples[i] = static_cast<double>(static_cast<std::int16_t>(raw)) / 32768.0;
  }
  return {Tensor::from({static_cast<std::int64_t>(n)}, std::move(samples)),
          static_cast<int>(sample_rate)};
}

void wav_write(const std::string& path, const Tensor& wave, int sample_rate) {
  check_arg(wave.defined() && wave.rank() == 1, "wav_write: expects a 1-d waveform");
  check_arg(sample_rate > 0, "wav_write: sample rate must be positive");
  const std::int64_t n = wave.numel();
  const std::uint32_t data_size = static_cast<std::uint32_t>(n * 2);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);  // byte rate
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits per sample
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);
  for (std::int64_t i = 0; i < n; ++i) {
    double v = std::round(wave.data()[i] * 32768.0);
    v = std::clamp(v, -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    check_state(f.good(), "wav_write: cannot open " + tmp);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    check_state(f.good(), "wav_write: short write to " + tmp);
  }
  check_state(std::rename(tmp.c_str(), path.c_str()) == 0,
              "wav_write: cannot rename " + tmp + " to " + path);
}

}  // namespace lse
