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

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "pdadsv/audio.hpp"
#include "pdadsv/dsp.hpp"

namespace pdadsv {

inline constexpr std::size_t kNumFeatures = 32;
inline constexpr std::size_t kMfccOffset = 0;
inline constexpr std::size_t kDeltaOffset = 13;
inline constexpr std::size_t kHnrOffset = 26;
inline constexpr std::size_t kGneOffset = 31;

// Ordered record: 13 MFCC means, 13 delta means, 5 HNR bands (dB), GNE.
struct FeatureVector32 {
  std::array<double, kNumFeatures> values{};

  std::span<const double> mfcc_mean() const { return {values.data() + kMfccOffset, 13}; }
  std::span<const double> delta_mean() const { return {values.data() + kDeltaOffset, 13}; }
  std::span<const double> hnr_db() const { return {values.data() + kHnrOffset, 5}; }
  double gne() const { return values[kGneOffset]; }

  friend bool operator==(const FeatureVector32&, const FeatureVector32&) = default;
};

// mfcc0..mfcc12, delta0..delta12, hnr05, hnr15, hnr25, hnr35, hnr38, gne
const std::array<std::string, kNumFeatures>& feature_names();

// Silence threshold shared by the HNR and GNE preconditions.
inline constexpr double kSilenceRms = 1e-6;

double rms(std::span<const double> samples);

// Mean per-frame harmonicity (dB) of the clip low-passed to band_fmax_hz.
// Frame value is 10*log10(r / (1 - r)) for the best normalized
// autocorrelation peak r over pitch lags, clamped to +-hnr_cap_db.
// Throws kSilentSignal.
double hnr_band(const AudioClip& clip, double band_fmax_hz, const DspConfig& cfg);

// Peak normalized autocorrelation per frame of an already band-limited
// signal; exposed for testing.
std::vector<double> frame_harmonicity(std::span<const double> signal,
                                      int sample_rate_hz, const DspConfig& cfg);

double harmonicity_to_db(double r, double cap_db);

// FIR length used for the HNR band filters at a given rate.
std::size_t hnr_filter_taps(int sample_rate_hz);

inline constexpr int kGneSampleRateHz = 10000;
inline constexpr int kGneLpcOrder = 13;

// Band-limited resampling to 10 kHz (anti-alias FIR + linear interpolation).
std::vector<double> resample_for_gne(const AudioClip& clip);

// LPC inverse-filter residual, frame-adaptive (30 ms analysis, 10 ms hop).
std::vector<double> lpc_residual(std::span<const double> signal, int order,
                                 std::size_t frame_len, std::size_t hop);

// Glottal-to-noise excitation ratio in (0, 1]. Throws kSilentSignal,
// kClipTooShort.
double gne(const AudioClip& clip, const DspConfig& cfg);

// Throws kClipTooShort (< min_duration_s), kSilentSignal.
FeatureVector32 extract_features(const AudioClip& clip, const DspConfig& cfg = {});

void write_feature_csv_header(std::ostream& out);
void write_feature_csv_row(std::ostream& out, const FeatureVector32& v);

}  // namespace pdadsv
