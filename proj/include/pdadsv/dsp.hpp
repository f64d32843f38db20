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
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pdadsv/audio.hpp"

namespace pdadsv {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr std::size_t kNumCepstra = 13;
inline constexpr std::size_t kNumHnrBands = 5;

// Short-time analysis parameters. Defaults target 44.1 kHz sustained vowels.
struct DspConfig {
  std::size_t frame_len_samples = 2048;  // also the FFT size
  std::size_t hop_samples = 512;
  std::size_t n_mel_filters = 26;
  double fmin_hz = 0.0;
  std::optional<double> fmax_hz;  // unset: Nyquist
  int delta_window = 2;
  double log_floor = 1e-10;
  std::array<double, kNumHnrBands> hnr_band_cutoffs_hz{500.0, 1500.0, 2500.0,
                                                       3500.0, 3800.0};
  double hnr_pitch_min_hz = 70.0;
  double hnr_pitch_max_hz = 400.0;
  double hnr_cap_db = 40.0;
  double min_duration_s = 5.0;

  double effective_fmax(int sample_rate_hz) const {
    return fmax_hz ? *fmax_hz : sample_rate_hz / 2.0;
  }

  // Throws Error{kInvalidConfig} when a field is out of range for the rate.
  void validate(int sample_rate_hz) const;
};

enum class WindowKind { kHamming, kRectangular };

std::vector<double> make_window(WindowKind kind, std::size_t length);

// n_frames = floor((N - frame_len) / hop) + 1, each frame windowed; the
// trailing partial frame is dropped. Throws kClipTooShortForFrame.
Matrix frame_signal(std::span<const double> samples, std::size_t frame_len,
                    std::size_t hop, WindowKind window = WindowKind::kHamming);
Matrix frame_signal(const AudioClip& clip, const DspConfig& cfg,
                    WindowKind window = WindowKind::kHamming);

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// In-place iterative radix-2 FFT. The inverse transform is scaled by 1/n.
// Throws kNonPowerOfTwoLength.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

// |X_k|^2 for k = 0..n/2.
std::vector<double> power_spectrum(std::span<const double> frame);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct FilterBank {
  Matrix weights;                  // n_filters x (n_fft/2 + 1)
  std::vector<double> center_hz;   // one per filter, ascending
  std::vector<double> edge_hz;     // n_filters + 2 mel-spaced band edges
};

// Triangular filters equally spaced on the mel scale, each rescaled to a
// peak of exactly 1. Throws kInvalidFrequencyRange.
FilterBank mel_filterbank(const DspConfig& cfg, int sample_rate_hz);

// Orthonormal DCT-II of x, keeping the first n_out coefficients.
std::vector<double> dct_ii_orthonormal(std::span<const double> x,
                                       std::size_t n_out);

// 13 x n_frames cepstra: log(max(fbank * |X|^2, floor)) then DCT-II.
Matrix mfcc(const AudioClip& clip, const DspConfig& cfg);

// Regression deltas over +-window frames with edge replication.
Matrix delta(const Matrix& coeffs, int window);

// Hamming-windowed sinc low-pass with unit DC gain. taps must be odd.
std::vector<double> design_lowpass_fir(double cutoff_hz, int sample_rate_hz,
                                       std::size_t taps);

// Linear convolution via FFT, trimmed to x.size() and aligned so a
// symmetric kernel introduces no delay.
std::vector<double> fft_convolve_same(std::span<const double> x,
                                      std::span<const double> kernel);

}  // namespace pdadsv
