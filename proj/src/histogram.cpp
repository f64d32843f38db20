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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdadsv/error.hpp"
#include "pdadsv/gbdt.hpp"
#include "pdadsv/rng.hpp"

namespace pdadsv {
namespace {

// ceil(frac * n), tolerant of representation error in frac.
std::size_t fraction_count(double frac, std::size_t n) {
  const double raw = frac * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

}  // namespace

std::uint32_t BinnedFeatures::bin_of(std::size_t feature, double value) const {
  const auto& c = cuts[feature];
  return static_cast<std::uint32_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

BinnedFeatures bin_features(const Matrix& x, std::size_t max_bins) {
  if (max_bins < 2) throw Error(ErrorCode::kInvalidConfig, "max_bins must be >= 2");
  BinnedFeatures out;
  out.n_rows = x.rows();
  out.bins.resize(x.cols());
  out.cuts.resize(x.cols());
  std::vector<double> column(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) column[i] = x(i, f);
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> distinct;
    std::vector<std::size_t> counts;
    for (double v : sorted) {
      if (distinct.empty() || v != distinct.back()) {
        distinct.push_back(v);
        counts.push_back(0);
      }
      ++counts.back();
    }

    auto& cuts = out.cuts[f];
    if (distinct.size() <= max_bins) {
      for (std::size_t j = 0; j + 1 < distinct.size(); ++j) {
        cuts.push_back(std::midpoint(distinct[j], distinct[j + 1]));
      }
    } else {
      // Equal-frequency boundaries, snapped to gaps between distinct values.
      const double per_bin = static_cast<double>(x.rows()) / static_cast<double>(max_bins);
      std::size_t cumulative = 0;
      for (std::size_t j = 0; j + 1 < distinct.size() && cuts.size() + 1 < max_bins; ++j) {
        cumulative += counts[j];
        if (static_cast<double>(cumulative) >= per_bin * static_cast<double>(cuts.size() + 1)) {
          cuts.push_back(std::midpoint(distinct[j], distinct[j + 1]));
        }
      }
    }

    out.bins[f].resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out.bins[f][i] = out.bin_of(f, column[i]);
  }
  return out;
}

GossSample goss_sample(std::span<const double> grad, double a, double b, std::uint64_t seed) {
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0 && a + b <= 1.0 + 1e-12)) {
    throw Error(ErrorCode::kInvalidFractions, "GOSS fractions need a, b in [0, 1] and a + b <= 1");
  }
  const std::size_t n = grad.size();
  std::vector<std::size_t> by_magnitude(n);
  std::iota(by_magnitude.begin(), by_magnitude.end(), std::size_t{0});
  std::stable_sort(by_magnitude.begin(), by_magnitude.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(grad[i]) > std::abs(grad[j]);
  });

  const std::size_t n_top = fraction_count(a, n);
  std::vector<std::pair<std::size_t, double>> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n_top; ++i) kept.emplace_back(by_magnitude[i], 1.0);

  std::vector<std::size_t> rest(by_magnitude.begin() + static_cast<std::ptrdiff_t>(n_top),
                                by_magnitude.end());
  std::sort(rest.begin(), rest.end());
  const std::size_t n_rand = std::min(rest.size(), fraction_count(b, n));
  if (n_rand > 0) {
    const double weight = (1.0 - a) / b;
    Rng rng(seed);
    for (std::size_t i = 0; i < n_rand; ++i) {
      const std::size_t j = i + rng.uniform_index(rest.size() - i);
      std::swap(rest[i], rest[j]);
      kept.emplace_back(rest[i], weight);
    }
  }

  std::sort(kept.begin(), kept.end());
  GossSample out;
  out.indices.reserve(kept.size());
  out.multipliers.reserve(kept.size());
  for (const auto& [idx, w] : kept) {
    out.indices.push_back(idx);
    out.multipliers.push_back(w);
  }
  return out;
}

std::uint32_t FeatureBundles::decode(std::size_t feature, std::size_t row) const {
  const BundleMember& m = bundles[bundle_of[feature]][slot_of[feature]];
  const std::uint32_t v = columns[bundle_of[feature]][row];
  if (v > m.offset && v < m.offset + m.n_bins) return v - m.offset;
  return 0;
}

std::vector<std::vector<std::uint32_t>> FeatureBundles::decode_all() const {
  std::vector<std::vector<std::uint32_t>> out(n_features, std::vector<std::uint32_t>(n_rows));
  for (std::size_t f = 0; f < n_features; ++f) {
    for (std::size_t r = 0; r < n_rows; ++r) out[f][r] = decode(f, r);
  }
  return out;
}

FeatureBundles efb_bundle(const BinnedFeatures& binned, double max_conflict) {
  const std::size_t n = binned.n_rows;
  const std::size_t d = binned.n_features();
  const auto budget = static_cast<std::size_t>(std::floor(max_conflict * static_cast<double>(n) + 1e-9));

  std::vector<std::size_t> nonzero(d, 0);
  for (std::size_t f = 0; f < d; ++f) {
    for (std::uint32_t v : binned.bins[f]) nonzero[f] += v != 0;
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return nonzero[a] > nonzero[b]; });

  FeatureBundles out;
  out.n_rows = n;
  out.n_features = d;
  out.bundle_of.assign(d, 0);
  out.slot_of.assign(d, 0);
  std::vector<std::vector<char>> used;  // per bundle: row already non-zero

  for (std::size_t f : order) {
    const auto& col = binned.bins[f];
    std::size_t target = out.bundles.size();
    for (std::size_t k = 0; k < out.bundles.size(); ++k) {
      std::size_t conflicts = 0;
      for (std::size_t r = 0; r < n && conflicts <= budget; ++r) {
        conflicts += (col[r] != 0 && used[k][r]) ? 1 : 0;
      }
      if (conflicts <= budget) {
        target = k;
        break;
      }
    }
    if (target == out.bundles.size()) {
      out.bundles.emplace_back();
      out.columns.emplace_back(n, 0);
      out.total_bins.push_back(1);
      used.emplace_back(n, 0);
    }
    BundleMember m;
    m.feature = f;
    m.n_bins = static_cast<std::uint32_t>(binned.n_bins(f));
    m.offset = out.total_bins[target] - 1;
    out.total_bins[target] += m.n_bins - 1;
    out.bundle_of[f] = target;
    out.slot_of[f] = out.bundles[target].size();
    out.bundles[target].push_back(m);

    auto& column = out.columns[target];
    for (std::size_t r = 0; r < n; ++r) {
      if (col[r] == 0) continue;
      if (!used[target][r]) column[r] = m.offset + col[r];
      used[target][r] = 1;
    }
  }
  return out;
}

}  // namespace pdadsv
