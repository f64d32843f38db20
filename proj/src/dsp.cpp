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

#include "pdadsv/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "pdadsv/error.hpp"

namespace pdadsv {
namespace {

using Complex = std::complex<double>;

// exp(-2*pi*i*k/n) for k < n/2, computed directly per entry rather than by
// recurrence so rounding does not accumulate across the table.
// Plain product; std::complex operator* takes the slow NaN-recovery path.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

const std::vector<Complex>& twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<Complex>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Complex> table(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    table[k] = Complex(std::cos(angle), std::sin(angle));
  }
  return cache.emplace(n, std::move(table)).first->second;
}

const Matrix& dct_matrix(std::size_t n_in, std::size_t n_out) {
  thread_local std::unordered_map<std::size_t, Matrix> cache;
  const std::size_t key = n_in * 4096 + n_out;
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Matrix m(n_out, n_in);
  const double n = static_cast<double>(n_in);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n_in; ++i) {
      m(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                 (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
    }
  }
  return cache.emplace(key, std::move(m)).first->second;
}

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

}  // namespace

void DspConfig::validate(int sample_rate_hz) const {
  require(sample_rate_hz > 0, ErrorCode::kInvalidConfig, "sample rate must be positive");
  require(hop_samples >= 1, ErrorCode::kInvalidConfig, "hop_samples must be >= 1");
  require(is_power_of_two(frame_len_samples) && frame_len_samples >= 4,
          ErrorCode::kNonPowerOfTwoLength,
          "frame_len_samples must be a power of two (it is the FFT size)");
  require(n_mel_filters >= 1, ErrorCode::kInvalidConfig, "n_mel_filters must be >= 1");
  require(delta_window >= 1, ErrorCode::kInvalidConfig, "delta_window must be >= 1");
  require(log_floor > 0.0, ErrorCode::kInvalidConfig, "log_floor must be positive");
  const double nyquist = sample_rate_hz / 2.0;
  const double fmax = effective_fmax(sample_rate_hz);
  require(fmin_hz >= 0.0 && fmin_hz < fmax && fmax <= nyquist,
          ErrorCode::kInvalidFrequencyRange,
          "mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  for (std::size_t i = 0; i < hnr_band_cutoffs_hz.size(); ++i) {
    require(hnr_band_cutoffs_hz[i] > 0.0 && hnr_band_cutoffs_hz[i] < nyquist,
            ErrorCode::kInvalidConfig, "HNR band cutoffs must lie in (0, sample_rate/2)");
    require(i == 0 || hnr_band_cutoffs_hz[i] > hnr_band_cutoffs_hz[i - 1],
            ErrorCode::kInvalidConfig, "HNR band cutoffs must be ascending");
  }
  require(hnr_pitch_min_hz > 0.0 && hnr_pitch_min_hz < hnr_pitch_max_hz,
          ErrorCode::kInvalidConfig, "HNR pitch range must satisfy 0 < min < max");
  require(hnr_cap_db > 0.0, ErrorCode::kInvalidConfig, "hnr_cap_db must be positive");
}

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (kind == WindowKind::kHamming && length > 1) {
    const double denom = static_cast<double>(length - 1);
    for (std::size_t i = 0; i < length; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
    }
  }
  return w;
}

Matrix frame_signal(std::span<const double> samples, std::size_t frame_len,
                    std::size_t hop, WindowKind window) {
  require(hop >= 1 && frame_len >= 1, ErrorCode::kInvalidConfig,
          "frame length and hop must be positive");
  if (samples.size() < frame_len) {
    throw Error(ErrorCode::kClipTooShortForFrame,
                "clip has " + std::to_string(samples.size()) +
                    " samples, fewer than one frame of " + std::to_string(frame_len));
  }
  const std::size_t n_frames = (samples.size() - frame_len) / hop + 1;
  const std::vector<double> w = make_window(window, frame_len);
  Matrix frames(n_frames, frame_len);
  for (std::size_t f = 0; f < n_frames; ++f) {
    auto out = frames.row(f);
    const double* in = samples.data() + f * hop;
    for (std::size_t i = 0; i < frame_len; ++i) out[i] = in[i] * w[i];
  }
  return frames;
}

Matrix frame_signal(const AudioClip& clip, const DspConfig& cfg, WindowKind window) {
  return frame_signal(clip.samples, cfg.frame_len_samples, cfg.hop_samples, window);
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<Complex>& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::kNonPowerOfTwoLength,
                "FFT length " + std::to_string(n) + " is not a power of two");
  }
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const auto& tw = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = tw[k * stride];
        if (inverse) w = std::conj(w);
        const Complex a = data[start + k];
        const Complex b = mul(data[start + k + half], w);
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : data) v *= scale;
  }
}

std::vector<double> power_spectrum(std::span<const double> frame) {
  std::vector<Complex> buf(frame.begin(), frame.end());
  fft_inplace(buf);
  std::vector<double> power(frame.size() / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

FilterBank mel_filterbank(const DspConfig& cfg, int sample_rate_hz) {
  const double fmax = cfg.effective_fmax(sample_rate_hz);
  if (!(cfg.fmin_hz >= 0.0 && cfg.fmin_hz < fmax && fmax <= sample_rate_hz / 2.0)) {
    throw Error(ErrorCode::kInvalidFrequencyRange,
                "mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
  const std::size_t n_filters = cfg.n_mel_filters;
  const std::size_t n_bins = cfg.frame_len_samples / 2 + 1;

  FilterBank fb;
  fb.weights = Matrix(n_filters, n_bins);
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(fmax);
  fb.edge_hz.resize(n_filters + 2);
  for (std::size_t i = 0; i < n_filters + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_filters + 1);
    fb.edge_hz[i] = mel_to_hz(mel);
  }
  fb.edge_hz.front() = cfg.fmin_hz;
  fb.edge_hz.back() = fmax;

  const double bin_hz = static_cast<double>(sample_rate_hz) /
                        static_cast<double>(cfg.frame_len_samples);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double lo = fb.edge_hz[m];
    const double center = fb.edge_hz[m + 1];
    const double hi = fb.edge_hz[m + 2];
    fb.center_hz.push_back(center);
    auto w = fb.weights.row(m);
    double peak = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double v = 0.0;
      if (f >= lo && f <= center && center > lo) {
        v = (f - lo) / (center - lo);
      } else if (f > center && f <= hi && hi > center) {
        v = (hi - f) / (hi - center);
      }
      w[k] = v;
      peak = std::max(peak, v);
    }
    if (peak > 0.0) {
      for (double& v : w) v /= peak;
    } else {
      // Filter narrower than one FFT bin: collapse onto the nearest bin.
      const auto k = std::min<std::size_t>(
          n_bins - 1, static_cast<std::size_t>(std::lround(center / bin_hz)));
      w[k] = 1.0;
    }
  }
  return fb;
}

std::vector<double> dct_ii_orthonormal(std::span<const double> x, std::size_t n_out) {
  const Matrix& m = dct_matrix(x.size(), n_out);
  std::vector<double> out(n_out, 0.0);
  for (std::size_t k = 0; k < n_out; ++k) {
    const auto basis = m.row(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += basis[i] * x[i];
    out[k] = acc;
  }
  return out;
}

Matrix mfcc(const AudioClip& clip, const DspConfig& cfg) {
  cfg.validate(clip.sample_rate_hz);
  const Matrix frames = frame_signal(clip, cfg);
  const FilterBank fb = mel_filterbank(cfg, clip.sample_rate_hz);
  const std::size_t n_filters = fb.weights.rows();

  // Each triangle touches a contiguous bin range; skip the zeros.
  std::vector<std::pair<std::size_t, std::size_t>> support(n_filters);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const auto w = fb.weights.row(m);
    std::size_t first = w.size(), last = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] != 0.0) {
        first = std::min(first, k);
        last = k;
      }
    }
    support[m] = {first, last + 1};
  }

  Matrix out(kNumCepstra, frames.rows());
  std::vector<double> log_mel(n_filters);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const std::vector<double> power = power_spectrum(frames.row(t));
    for (std::size_t m = 0; m < n_filters; ++m) {
      const auto w = fb.weights.row(m);
      double energy = 0.0;
      for (std::size_t k = support[m].first; k < support[m].second; ++k) {
        energy += w[k] * power[k];
      }
      log_mel[m] = std::log(std::max(energy, cfg.log_floor));
    }
    const std::vector<double> cep = dct_ii_orthonormal(log_mel, kNumCepstra);
    for (std::size_t c = 0; c < kNumCepstra; ++c) out(c, t) = cep[c];
  }
  return out;
}

Matrix delta(const Matrix& coeffs, int window) {
  const std::size_t n_rows = coeffs.rows();
  const std::size_t n_frames = coeffs.cols();
  Matrix out(n_rows, n_frames);
  if (n_frames == 0 || window < 1) return out;
  double norm = 0.0;
  for (int m = 1; m <= window; ++m) norm += static_cast<double>(m * m);
  norm *= 2.0;
  const auto last = static_cast<std::ptrdiff_t>(n_frames) - 1;
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::ptrdiff_t t = 0; t <= last; ++t) {
      double acc = 0.0;
      for (int m = 1; m <= window; ++m) {
        const std::ptrdiff_t ahead = std::min<std::ptrdiff_t>(t + m, last);
        const std::ptrdiff_t behind = std::max<std::ptrdiff_t>(t - m, 0);
        acc += m * (coeffs(r, static_cast<std::size_t>(ahead)) -
                    coeffs(r, static_cast<std::size_t>(behind)));
      }
      out(r, static_cast<std::size_t>(t)) = acc / norm;
    }
  }
  return out;
}

std::vector<double> design_lowpass_fir(double cutoff_hz, int sample_rate_hz,
                                       std::size_t taps) {
  require(taps % 2 == 1, ErrorCode::kInvalidConfig, "FIR tap count must be odd");
  require(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0,
          ErrorCode::kInvalidFrequencyRange, "low-pass cutoff must lie below Nyquist");
  const double fc = cutoff_hz / sample_rate_hz;  // cycles per sample
  const auto mid = static_cast<std::ptrdiff_t>(taps / 2);
  const std::vector<double> w = make_window(WindowKind::kHamming, taps);
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const auto n = static_cast<double>(static_cast<std::ptrdiff_t>(i) - mid);
    const double sinc = n == 0.0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * n) /
                                       (std::numbers::pi * n);
    h[i] = sinc * w[i];
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> fft_convolve_same(std::span<const double> x,
                                      std::span<const double> kernel) {
  if (x.empty() || kernel.empty()) return std::vector<double>(x.size(), 0.0);
  const std::size_t full = x.size() + kernel.size() - 1;
  const std::size_t n = next_power_of_two(full);
  // Both real inputs share one complex transform: x in the real part, the
  // kernel in the imaginary part.
  std::vector<Complex> buf(n);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i].real(x[i]);
  for (std::size_t i = 0; i < kernel.size(); ++i) buf[i].imag(kernel[i]);
  fft_inplace(buf);
  std::vector<Complex> prod(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex zk = buf[k];
    const Complex zc = std::conj(buf[(n - k) % n]);
    const Complex xk = 0.5 * (zk + zc);
    const Complex d = zk - zc;
    const Complex hk(0.5 * d.imag(), -0.5 * d.real());
    prod[k] = mul(xk, hk);
  }
  fft_inplace(prod, /*inverse=*/true);
  const std::size_t delay = (kernel.size() - 1) / 2;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = prod[i + delay].real();
  return y;
}

}  // namespace pdadsv
