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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pdadsv/dsp.hpp"

namespace pdadsv {

// Hyper-parameters shared by the three boosting modes. Histogram-only knobs
// (max_bins, GOSS, EFB) are ignored by the exact modes.
struct TreeParams {
  int max_depth = 4;
  std::size_t min_samples_leaf = 2;
  double lambda = 1.0;  // L2 on leaf weights
  double gamma = 0.0;   // split penalty
  double learning_rate = 0.1;
  int n_rounds = 200;
  double colsample = 1.0;
  std::size_t max_bins = 255;
  bool goss = true;
  double goss_a = 0.2;
  double goss_b = 0.1;
  bool efb = true;
  double efb_max_conflict = 0.0;
  std::uint64_t seed = 42;

  // Throws kInvalidConfig / kInvalidFractions.
  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary tree in a flat array, root at 0, children always after parents.
// Routing: x[feature] < threshold goes left.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t leaf_index(std::span<const double> x) const;
  int depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

// ---------------------------------------------------------------------------
// Split search

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
// A term whose denominator is zero contributes nothing.
double split_gain(double grad_left, double hess_left, double grad_right,
                  double hess_right, double lambda, double gamma);

// Best threshold on one column: thresholds are midpoints of adjacent
// distinct values, both sides need min_samples_leaf rows, gain must be > 0,
// ties go to the lower threshold. Gains within a relative 1e-12 of each
// other count as ties. The returned feature index is 0.
std::optional<SplitCandidate> best_split_exact(std::span<const double> values,
                                               std::span<const double> grad,
                                               std::span<const double> hess,
                                               const TreeParams& params);

// Best split over every column of X (n x d); ties go to the lowest feature.
std::optional<SplitCandidate> find_best_split_exact(const Matrix& x,
                                                    std::span<const double> grad,
                                                    std::span<const double> hess,
                                                    const TreeParams& params);

// ---------------------------------------------------------------------------
// Histogram machinery

// Quantile-binned columns. bin(x) = number of cut points <= x, so
// bin(x) <= b exactly when x < cuts[b].
struct BinnedFeatures {
  std::size_t n_rows = 0;
  std::vector<std::vector<std::uint32_t>> bins;  // [feature][row]
  std::vector<std::vector<double>> cuts;         // [feature], ascending

  std::size_t n_features() const { return bins.size(); }
  std::size_t n_bins(std::size_t feature) const { return cuts[feature].size() + 1; }
  std::uint32_t bin_of(std::size_t feature, double value) const;
};

// When a column has at most max_bins distinct values every distinct value
// gets its own bin and the cuts are the exact-split midpoints.
BinnedFeatures bin_features(const Matrix& x, std::size_t max_bins);

struct GossSample {
  std::vector<std::size_t> indices;  // ascending
  std::vector<double> multipliers;   // aligned with indices
};

// Keeps the ceil(a*n) largest |g| rows (weight 1) and ceil(b*n) uniformly
// drawn rows of the remainder (weight (1-a)/b). Throws kInvalidFractions.
GossSample goss_sample(std::span<const double> grad, double a, double b,
                       std::uint64_t seed);

struct BundleMember {
  std::size_t feature = 0;
  std::uint32_t offset = 0;  // bundled value = offset + bin for bin > 0
  std::uint32_t n_bins = 0;
};

struct FeatureBundles {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<BundleMember>> bundles;
  std::vector<std::vector<std::uint32_t>> columns;  // [bundle][row]
  std::vector<std::uint32_t> total_bins;            // per bundle, incl. 0

  // Bin of `feature` recovered from bundled storage.
  std::uint32_t decode(std::size_t feature, std::size_t row) const;
  std::vector<std::vector<std::uint32_t>> decode_all() const;

  std::vector<std::size_t> bundle_of;  // [feature]
  std::vector<std::size_t> slot_of;    // [feature] position inside bundle
};

// Greedy exclusive feature bundling over bin 0 as the "zero" value.
// Features are visited by descending non-zero count and joined to the first
// bundle whose conflict count stays <= max_conflict * n. On a conflicting
// row the member placed first keeps the slot.
FeatureBundles efb_bundle(const BinnedFeatures& binned, double max_conflict);

// Best root split from histograms over every row; same rules as
// find_best_split_exact with thresholds taken from the bin cuts.
std::optional<SplitCandidate> find_best_split_histogram(
    const BinnedFeatures& binned, std::span<const double> grad,
    std::span<const double> hess, const TreeParams& params);

// ---------------------------------------------------------------------------
// Tree growth

enum class SplitMethod { kExact, kHistogram };

// Greedy growth from per-row gradients. Leaves get -G/(H+lambda). `features`
// restricts split candidates (empty = all). For histogram growth pass the
// binned (optionally bundled) view; rows/multipliers select a weighted
// subsample (empty = every row, weight 1).
struct GrowInput {
  const Matrix* x = nullptr;
  const BinnedFeatures* binned = nullptr;
  const FeatureBundles* bundles = nullptr;
  std::span<const double> grad;
  std::span<const double> hess;
  std::span<const std::size_t> rows;
  std::span<const double> multipliers;
  std::span<const std::size_t> features;
};

DecisionTree build_tree(const GrowInput& input, const TreeParams& params,
                        SplitMethod method,
                        std::vector<std::size_t>* row_leaf = nullptr);

// ---------------------------------------------------------------------------
// Boosting

enum class BoostingMode { kClassicGb, kSecondOrder, kHistogramGossEfb };

std::string_view boosting_mode_name(BoostingMode mode);
std::optional<BoostingMode> parse_boosting_mode(std::string_view name);

struct GradHess {
  double grad;
  double hess;
};

// Binary log-loss derivatives at a margin: p = sigmoid(m), g = p - y,
// h = p (1 - p).
GradHess logistic_grad_hess(int label, double margin);

double sigmoid(double margin);

struct BoostedModel {
  BoostingMode mode = BoostingMode::kSecondOrder;
  double base_margin = 0.0;
  double learning_rate = 0.1;
  std::size_t feature_count = 0;
  std::vector<DecisionTree> trees;

  // base_margin + learning_rate * sum of tree outputs. Throws
  // kDimensionMismatch.
  double predict_margin(std::span<const double> x) const;
  double predict_probability(std::span<const double> x) const;
  int predict_label(std::span<const double> x) const;  // p >= 0.5 -> 1

  BoostedModel truncated(std::size_t n_trees) const;

  friend bool operator==(const BoostedModel&, const BoostedModel&) = default;
};

// Throws kSingleClassDataset, kDimensionMismatch.
BoostedModel fit_boosted(const Matrix& x, std::span<const int> labels,
                         const TreeParams& params, BoostingMode mode);

double log_loss(std::span<const int> labels, std::span<const double> probabilities);

// ---------------------------------------------------------------------------
// Bagging

struct BaggingParams {
  int n_trees = 100;
  int max_depth = 10;
  std::size_t min_samples_leaf = 1;
  bool bootstrap = true;  // off only for tests
  std::uint64_t seed = 42;
};

struct BaggedModel {
  std::size_t feature_count = 0;
  std::vector<DecisionTree> trees;  // leaf value = positive fraction

  std::vector<int> votes(std::span<const double> x) const;
  double positive_vote_fraction(std::span<const double> x) const;
  int predict_label(std::span<const double> x) const;

  friend bool operator==(const BaggedModel&, const BaggedModel&) = default;
};

// Majority of binary votes; an exact tie is positive.
int majority_vote(std::span<const int> votes);

// Full Gini classification tree on the (possibly repeated) rows.
DecisionTree build_gini_tree(const Matrix& x, std::span<const int> labels,
                             std::span<const std::size_t> rows, int max_depth,
                             std::size_t min_samples_leaf);

// Throws kSingleClassDataset.
BaggedModel fit_bagging(const Matrix& x, std::span<const int> labels,
                        const BaggingParams& params);

}  // namespace pdadsv
