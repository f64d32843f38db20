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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pdadsv {

// Decoded mono PCM. Samples are in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  // Channel count of the source container; only channel 0 is kept.
  int source_channels = 1;

  double duration_s() const {
    return sample_rate_hz > 0
               ? static_cast<double>(samples.size()) / sample_rate_hz
               : 0.0;
  }
};

// Parses a RIFF/WAVE container holding 16-bit linear PCM. Multi-channel
// input keeps channel 0. Throws Error{kMalformedContainer,
// kUnsupportedEncoding, kEmptyAudio}.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

AudioClip read_wav_file(const std::filesystem::path& path);

// 16-bit PCM RIFF encoder; values are clamped to [-1, 1] and rounded.
// All channels receive the same samples.
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> samples,
                                           int sample_rate_hz,
                                           int channels = 1);

}  // namespace pdadsv
