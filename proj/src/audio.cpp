// Copyright 2026 The PD-ADSV Authors
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

#include "pdadsv/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "pdadsv/error.hpp"

namespace pdadsv {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") ||
      !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kMalformedContainer, "missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t sample_rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    // Writers that stream audio sometimes leave the data size unpatched;
    // clip the chunk to what is actually present.
    const std::size_t available = bytes.size() - body;
    const std::size_t size = std::min<std::size_t>(chunk_size, available);

    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) {
        throw Error(ErrorCode::kMalformedContainer, "fmt chunk too short");
      }
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      sample_rate = read_u32(bytes, body + 4);
      block_align = read_u16(bytes, body + 12);
      bits = read_u16(bytes, body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = read_u16(bytes, body + 24);  // first two bytes of the GUID
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1U);
  }

  if (!have_fmt) throw Error(ErrorCode::kMalformedContainer, "no fmt chunk");
  if (!have_data) throw Error(ErrorCode::kMalformedContainer, "no data chunk");
  if (format != kFormatPcm) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "only linear PCM is supported (format tag " +
                    std::to_string(format) + ")");
  }
  if (bits != 16) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "only 16-bit samples are supported (got " +
                    std::to_string(bits) + " bits)");
  }
  if (channels == 0 || sample_rate == 0) {
    throw Error(ErrorCode::kMalformedContainer,
                "zero channels or zero sample rate");
  }
  const std::size_t frame_bytes =
      block_align >= 2U * channels ? block_align : 2U * channels;

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(sample_rate);
  clip.source_channels = channels;
  const std::size_t n = data.size() / frame_bytes;
  if (n == 0) throw Error(ErrorCode::kEmptyAudio, "WAV contains no samples");
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(data, i * frame_bytes));
    clip.samples[i] = static_cast<double>(raw) / 32768.0;
  }
  return clip;
}

AudioClip read_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> samples,
                                           int sample_rate_hz, int channels) {
  const auto n = static_cast<std::uint32_t>(samples.size());
  const auto ch = static_cast<std::uint16_t>(channels);
  const std::uint32_t data_bytes = n * ch * 2U;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, ch);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * ch * 2U);
  put_u16(out, static_cast<std::uint16_t>(ch * 2U));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    for (int c = 0; c < channels; ++c) put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

}  // namespace pdadsv
