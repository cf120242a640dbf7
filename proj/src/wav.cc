// Copyright 2026 The lgmsep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// RIFF/WAVE reader and writer for PCM16 and IEEE float32 data.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "bss/signal.h"

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace bss {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(const std::vector<char>& buf, std::size_t pos) {
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  return value;
}

template <typename T>
void AppendLe(std::vector<char>& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

void AppendTag(std::vector<char>& buf, const char* tag) {
  buf.insert(buf.end(), tag, tag + 4);
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw Error(path + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_pos = 0, data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string tag(buf.data() + pos, 4);
    const auto len = ReadLe<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (tag == "fmt ") {
      if (len < 16 || body + len > buf.size()) {
        throw Error(path + ": truncated fmt chunk");
      }
      format = ReadLe<std::uint16_t>(buf, body);
      num_channels = ReadLe<std::uint16_t>(buf, body + 2);
      rate = ReadLe<std::uint32_t>(buf, body + 4);
      bits = ReadLe<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible) {
        if (len < 26) throw Error(path + ": truncated extensible fmt chunk");
        format = ReadLe<std::uint16_t>(buf, body + 24);
      }
      have_fmt = true;
    } else if (tag == "data") {
      data_pos = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
      if (data_len < len) throw Error(path + ": truncated data chunk");
      have_data = true;
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw Error(path + ": missing or truncated fmt chunk");
  if (!have_data) throw Error(path + ": missing data chunk");
  if (num_channels == 0) throw Error(path + ": zero channels");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(path + ": unsupported WAV format tag " +
                std::to_string(format) + " with " + std::to_string(bits) +
                " bits per sample");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * num_channels);
  Waveform wave(num_channels, frames, static_cast<int>(rate));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < num_channels; ++c) {
      const std::size_t at = data_pos + (t * num_channels + c) * width;
      wave.channels[c][t] =
          pcm16 ? ReadLe<std::int16_t>(buf, at) / 32768.0
                : static_cast<double>(ReadLe<float>(buf, at));
    }
  }
  return wave;
}

void WriteWav(const std::string& path, const Waveform& wave, bool pcm16) {
  wave.Validate();
  const auto num_channels = static_cast<std::uint16_t>(wave.NumChannels());
  if (num_channels == 0) throw Error("cannot write a zero-channel WAV");
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::size_t frames = wave.Length();
  const auto data_len =
      static_cast<std::uint32_t>(frames * num_channels * (bits / 8));

  std::vector<char> buf;
  buf.reserve(44 + data_len);
  AppendTag(buf, "RIFF");
  AppendLe<std::uint32_t>(buf, 36 + data_len);
  AppendTag(buf, "WAVE");
  AppendTag(buf, "fmt ");
  AppendLe<std::uint32_t>(buf, 16);
  AppendLe<std::uint16_t>(buf, pcm16 ? kFormatPcm : kFormatFloat);
  AppendLe<std::uint16_t>(buf, num_channels);
  AppendLe<std::uint32_t>(buf, static_cast<std::uint32_t>(wave.sample_rate));
  AppendLe<std::uint32_t>(
      buf, static_cast<std::uint32_t>(wave.sample_rate) * num_channels *
               (bits / 8));
  AppendLe<std::uint16_t>(buf,
                          static_cast<std::uint16_t>(num_channels * bits / 8));
  AppendLe<std::uint16_t>(buf, bits);
  AppendTag(buf, "data");
  AppendLe<std::uint32_t>(buf, data_len);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < num_channels; ++c) {
      const double v = wave.channels[c][t];
      if (pcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0,
                                    32767.0);
        AppendLe<std::int16_t>(buf, static_cast<std::int16_t>(q));
      } else {
        AppendLe<float>(buf, static_cast<float>(v));
      }
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bss
