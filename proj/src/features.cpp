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

#include "pdadsv/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "pdadsv/error.hpp"

namespace pdadsv {
namespace {

using Complex = std::complex<double>;

void require_audible(const AudioClip& clip) {
  if (clip.samples.empty() || rms(clip.samples) <= kSilenceRms) {
    throw Error(ErrorCode::kSilentSignal,
                "recording is silent (RMS <= 1e-6); nothing to analyze");
  }
}

void require_duration(const AudioClip& clip, const DspConfig& cfg) {
  if (clip.duration_s() < cfg.min_duration_s) {
    throw Error(ErrorCode::kClipTooShort,
                "recording lasts " + std::to_string(clip.duration_s()) +
                    " s; the sustained /a/ protocol needs at least " +
                    std::to_string(cfg.min_duration_s) + " s");
  }
}

// Levinson-Durbin on autocorrelation r[0..order]; returns a[0..order], a[0]=1.
std::vector<double> levinson(std::span<const double> r, int order) {
  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  if (err <= 0.0) return a;
  std::vector<double> prev(a.size());
  for (int i = 1; i <= order; ++i) {
    double acc = r[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j) {
      acc += a[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(i - j)];
    }
    const double k = -acc / err;
    prev = a;
    for (int j = 1; j < i; ++j) {
      a[static_cast<std::size_t>(j)] =
          prev[static_cast<std::size_t>(j)] + k * prev[static_cast<std::size_t>(i - j)];
    }
    a[static_cast<std::size_t>(i)] = k;
    err *= (1.0 - k * k);
    if (err <= 0.0) break;
  }
  return a;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = [] {
    std::array<std::string, kNumFeatures> n;
    for (std::size_t i = 0; i < 13; ++i) {
      n[kMfccOffset + i] = "mfcc" + std::to_string(i);
      n[kDeltaOffset + i] = "delta" + std::to_string(i);
    }
    n[kHnrOffset + 0] = "hnr05";
    n[kHnrOffset + 1] = "hnr15";
    n[kHnrOffset + 2] = "hnr25";
    n[kHnrOffset + 3] = "hnr35";
    n[kHnrOffset + 4] = "hnr38";
    n[kGneOffset] = "gne";
    return n;
  }();
  return names;
}

double rms(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double harmonicity_to_db(double r, double cap_db) {
  if (!(r > 0.0)) return -cap_db;
  if (r >= 1.0) return cap_db;
  const double db = 10.0 * std::log10(r / (1.0 - r));
  return std::clamp(db, -cap_db, cap_db);
}

std::size_t hnr_filter_taps(int sample_rate_hz) {
  // ~23 ms of impulse response: 1025 taps at 44.1 kHz.
  const auto half = static_cast<std::size_t>(std::lround(sample_rate_hz * 0.0116));
  return 2 * std::max<std::size_t>(half, 8) + 1;
}

std::vector<double> frame_harmonicity(std::span<const double> signal,
                                      int sample_rate_hz, const DspConfig& cfg) {
  const std::size_t frame_len = cfg.frame_len_samples;
  const std::size_t hop = cfg.hop_samples;
  const auto lag_min = static_cast<std::size_t>(
      std::ceil(sample_rate_hz / cfg.hnr_pitch_max_hz));
  const auto lag_max = static_cast<std::size_t>(
      std::floor(sample_rate_hz / cfg.hnr_pitch_min_hz));
  if (lag_max + 2 > frame_len || lag_min < 1) {
    throw Error(ErrorCode::kInvalidConfig,
                "frame too short for the HNR pitch lag range; raise frame_len_samples");
  }
  if (signal.size() < frame_len) {
    throw Error(ErrorCode::kClipTooShortForFrame, "clip shorter than one HNR frame");
  }
  const std::size_t n_frames = (signal.size() - frame_len) / hop + 1;
  const std::size_t fft_len = next_power_of_two(2 * frame_len);

  std::vector<double> result(n_frames, 0.0);
  std::vector<Complex> buf(fft_len);
  std::vector<double> frame_a(frame_len), frame_b(frame_len);
  std::vector<double> cum_a(frame_len + 1), cum_b(frame_len + 1);

  auto load = [&](std::size_t f, std::vector<double>& dst, std::vector<double>& cum) {
    const double* src = signal.data() + f * hop;
    double mean = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) mean += src[i];
    mean /= static_cast<double>(frame_len);
    cum[0] = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) {
      dst[i] = src[i] - mean;
      cum[i + 1] = cum[i] + dst[i] * dst[i];
    }
  };

  auto peak = [&](const std::vector<double>& cum, auto&& autocorr) {
    double best = 0.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      const double head = cum[frame_len - lag];
      const double tail = cum[frame_len] - cum[lag];
      const double denom = std::sqrt(head * tail);
      if (denom <= 0.0) continue;
      best = std::max(best, autocorr(lag) / denom);
    }
    return best;
  };

  // Two real frames share each complex transform: a in the real part, b in
  // the imaginary part. |A|^2 + i|B|^2 inverts to Ra + i*Rb.
  for (std::size_t f = 0; f < n_frames; f += 2) {
    const bool pair = f + 1 < n_frames;
    load(f, frame_a, cum_a);
    if (pair) load(f + 1, frame_b, cum_b);
    std::fill(buf.begin(), buf.end(), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < frame_len; ++i) {
      buf[i] = Complex(frame_a[i], pair ? frame_b[i] : 0.0);
    }
    fft_inplace(buf);
    std::vector<Complex> spec(fft_len);
    for (std::size_t k = 0; k < fft_len; ++k) {
      const Complex zk = buf[k];
      const Complex zc = std::conj(buf[(fft_len - k) % fft_len]);
      const Complex ak = 0.5 * (zk + zc);
      const Complex d = zk - zc;
      const Complex bk(0.5 * d.imag(), -0.5 * d.real());
      spec[k] = Complex(std::norm(ak), std::norm(bk));
    }
    fft_inplace(spec, /*inverse=*/true);
    result[f] = peak(cum_a, [&](std::size_t lag) { return spec[lag].real(); });
    if (pair) {
      result[f + 1] = peak(cum_b, [&](std::size_t lag) { return spec[lag].imag(); });
    }
  }
  return result;
}

double hnr_band(const AudioClip& clip, double band_fmax_hz, const DspConfig& cfg) {
  require_audible(clip);
  if (!(band_fmax_hz > 0.0 && band_fmax_hz < clip.sample_rate_hz / 2.0)) {
    throw Error(ErrorCode::kInvalidFrequencyRange,
                "HNR band edge must lie below the Nyquist frequency");
  }
  const std::vector<double> kernel =
      design_lowpass_fir(band_fmax_hz, clip.sample_rate_hz,
                         hnr_filter_taps(clip.sample_rate_hz));
  const std::vector<double> band = fft_convolve_same(clip.samples, kernel);
  const std::vector<double> r = frame_harmonicity(band, clip.sample_rate_hz, cfg);
  double acc = 0.0;
  for (double v : r) acc += harmonicity_to_db(v, cfg.hnr_cap_db);
  return acc / static_cast<double>(r.size());
}

std::vector<double> resample_for_gne(const AudioClip& clip) {
  const int sr = clip.sample_rate_hz;
  if (sr == kGneSampleRateHz) return clip.samples;
  std::vector<double> src = clip.samples;
  if (sr > kGneSampleRateHz) {
    const std::size_t taps = 2 * static_cast<std::size_t>(sr / 200) + 1;
    src = fft_convolve_same(clip.samples,
                            design_lowpass_fir(0.47 * kGneSampleRateHz, sr, taps));
  }
  const double step = static_cast<double>(sr) / kGneSampleRateHz;
  const auto n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(src.size() - 1) / step)) + 1;
  std::vector<double> out(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const double pos = static_cast<double>(m) * step;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    const double next = i + 1 < src.size() ? src[i + 1] : src[i];
    out[m] = src[i] + frac * (next - src[i]);
  }
  return out;
}

std::vector<double> lpc_residual(std::span<const double> signal, int order,
                                 std::size_t frame_len, std::size_t hop) {
  const std::size_t n = signal.size();
  std::vector<double> residual(n, 0.0);
  const std::vector<double> window = make_window(WindowKind::kHamming, frame_len);
  std::vector<double> seg(frame_len);
  std::vector<double> r(static_cast<std::size_t>(order) + 1);

  for (std::size_t block = 0; block < n; block += hop) {
    // Analysis window centred on the block being filtered.
    const std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(block + hop / 2);
    const std::ptrdiff_t start = centre - static_cast<std::ptrdiff_t>(frame_len / 2);
    for (std::size_t i = 0; i < frame_len; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      seg[i] = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n))
                   ? signal[static_cast<std::size_t>(idx)] * window[i]
                   : 0.0;
    }
    for (std::size_t lag = 0; lag < r.size(); ++lag) {
      double acc = 0.0;
      for (std::size_t i = lag; i < frame_len; ++i) acc += seg[i] * seg[i - lag];
      r[lag] = acc;
    }
    r[0] *= 1.0 + 1e-9;  // white-noise floor keeps the recursion stable
    const std::vector<double> a = levinson(r, order);

    const std::size_t end = std::min(block + hop, n);
    for (std::size_t t = block; t < end; ++t) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.size() && j <= t; ++j) acc += a[j] * signal[t - j];
      residual[t] = acc;
    }
  }
  return residual;
}

double gne(const AudioClip& clip, const DspConfig& cfg) {
  require_duration(clip, cfg);
  require_audible(clip);

  const std::vector<double> x = resample_for_gne(clip);
  constexpr std::size_t kLpcFrame = 300;  // 30 ms at 10 kHz
  constexpr std::size_t kLpcHop = 100;
  const std::vector<double> excitation = lpc_residual(x, kGneLpcOrder, kLpcFrame, kLpcHop);

  const std::size_t n = excitation.size();
  const std::size_t fft_len = next_power_of_two(n);
  std::vector<Complex> spectrum(fft_len);
  for (std::size_t i = 0; i < n; ++i) spectrum[i] = Complex(excitation[i], 0.0);
  fft_inplace(spectrum);

  constexpr double kBandwidthHz = 1000.0;
  constexpr double kCenterStepHz = 500.0;
  constexpr double kFirstCenterHz = 500.0;
  constexpr double kLastCenterHz = 4500.0;
  const double bin_hz = static_cast<double>(kGneSampleRateHz) / static_cast<double>(fft_len);

  std::vector<double> centers;
  for (double c = kFirstCenterHz; c <= kLastCenterHz + 1e-9; c += kCenterStepHz) {
    centers.push_back(c);
  }

  // Hilbert envelope per band: Hann-weighted positive-frequency band,
  // doubled, inverted; the magnitude of the analytic signal.
  std::vector<std::vector<double>> envelopes;
  std::vector<Complex> band(fft_len);
  for (double c : centers) {
    std::fill(band.begin(), band.end(), Complex(0.0, 0.0));
    const double lo = c - kBandwidthHz / 2.0;
    const double hi = c + kBandwidthHz / 2.0;
    const auto k_lo = static_cast<std::size_t>(std::max(1.0, std::ceil(lo / bin_hz)));
    const auto k_hi = std::min(fft_len / 2, static_cast<std::size_t>(std::floor(hi / bin_hz)));
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double w = std::cos(std::numbers::pi * (f - c) / kBandwidthHz);
      band[k] = 2.0 * w * w * spectrum[k];
    }
    fft_inplace(band, /*inverse=*/true);
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(band[i]);
    envelopes.push_back(std::move(env));
  }

  std::vector<double> energy(envelopes.size());
  for (std::size_t b = 0; b < envelopes.size(); ++b) {
    energy[b] = std::inner_product(envelopes[b].begin(), envelopes[b].end(),
                                   envelopes[b].begin(), 0.0);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < envelopes.size(); ++i) {
    for (std::size_t j = i + 1; j < envelopes.size(); ++j) {
      if (centers[j] - centers[i] < kBandwidthHz / 2.0) continue;
      const double denom = std::sqrt(energy[i] * energy[j]);
      if (denom <= 0.0) continue;
      const double cross = std::inner_product(envelopes[i].begin(), envelopes[i].end(),
                                              envelopes[j].begin(), 0.0);
      best = std::max(best, cross / denom);
    }
  }
  // Non-negative envelopes give a correlation in [0, 1]; keep it strictly
  // positive and guard rounding above 1.
  return std::clamp(best, std::numeric_limits<double>::min(), 1.0);
}

FeatureVector32 extract_features(const AudioClip& clip, const DspConfig& cfg) {
  require_duration(clip, cfg);
  require_audible(clip);
  cfg.validate(clip.sample_rate_hz);

  FeatureVector32 out;
  const Matrix cep = mfcc(clip, cfg);
  const Matrix deltas = delta(cep, cfg.delta_window);
  const auto n_frames = static_cast<double>(cep.cols());
  for (std::size_t c = 0; c < kNumCepstra; ++c) {
    double sum_c = 0.0, sum_d = 0.0;
    for (std::size_t t = 0; t < cep.cols(); ++t) {
      sum_c += cep(c, t);
      sum_d += deltas(c, t);
    }
    out.values[kMfccOffset + c] = sum_c / n_frames;
    out.values[kDeltaOffset + c] = sum_d / n_frames;
  }
  for (std::size_t b = 0; b < kNumHnrBands; ++b) {
    out.values[kHnrOffset + b] = hnr_band(clip, cfg.hnr_band_cutoffs_hz[b], cfg);
  }
  out.values[kGneOffset] = gne(clip, cfg);
  return out;
}

void write_feature_csv_header(std::ostream& out) {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out << ',';
    out << names[i];
  }
  out << '\n';
}

void write_feature_csv_row(std::ostream& out, const FeatureVector32& v) {
  std::string line;
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    if (i) line.push_back(',');
    append_number(line, v.values[i]);
  }
  line.push_back('\n');
  out << line;
}

}  // namespace pdadsv
