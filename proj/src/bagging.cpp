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
#include <numeric>

#include "pdadsv/error.hpp"
#include "pdadsv/gbdt.hpp"
#include "pdadsv/rng.hpp"

namespace pdadsv {

// For 0/1 targets the Gini impurity decrease of a split equals
// 4 * split_gain(g = -y, h = 1, lambda = 0), and the leaf weight -G/H is the
// positive fraction, so the boosting grower builds Gini trees directly.
DecisionTree build_gini_tree(const Matrix& x, std::span<const int> labels,
                             std::span<const std::size_t> rows, int max_depth,
                             std::size_t min_samples_leaf) {
  if (x.rows() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels do not match feature rows");
  }
  std::vector<double> grad(labels.size()), hess(labels.size(), 1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) grad[i] = -static_cast<double>(labels[i]);

  TreeParams params;
  params.max_depth = max_depth;
  params.min_samples_leaf = min_samples_leaf;
  params.lambda = 0.0;
  params.gamma = 1e-12;  // impurity decrease must be strictly positive
  GrowInput in;
  in.x = &x;
  in.grad = grad;
  in.hess = hess;
  in.rows = rows;
  return build_tree(in, params, SplitMethod::kExact);
}

std::vector<int> BaggedModel::votes(std::span<const double> x) const {
  if (x.size() != feature_count) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(feature_count) + " features");
  }
  std::vector<int> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(t.predict(x) >= 0.5 ? 1 : 0);
  return out;
}

double BaggedModel::positive_vote_fraction(std::span<const double> x) const {
  const std::vector<int> v = votes(x);
  if (v.empty()) return 0.0;
  return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(v.size());
}

int BaggedModel::predict_label(std::span<const double> x) const { return majority_vote(votes(x)); }

int majority_vote(std::span<const int> votes) {
  const auto positive = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), 1));
  return 2 * positive >= votes.size() ? 1 : 0;
}

BaggedModel fit_bagging(const Matrix& x, std::span<const int> labels, const BaggingParams& params) {
  if (x.rows() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels do not match feature rows");
  }
  if (x.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "no training rows");
  if (params.n_trees < 1 || params.max_depth < 0 || params.min_samples_leaf < 1) {
    throw Error(ErrorCode::kInvalidConfig, "bagging needs n_trees >= 1, max_depth >= 0, min_samples_leaf >= 1");
  }
  const bool pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!(pos && neg)) {
    throw Error(ErrorCode::kSingleClassDataset, "training data contains a single class");
  }

  const std::size_t n = x.rows();
  BaggedModel model;
  model.feature_count = x.cols();
  std::vector<std::size_t> rows(n);
  for (int t = 0; t < params.n_trees; ++t) {
    if (params.bootstrap) {
      Rng rng = Rng::derive(params.seed, "bootstrap", static_cast<std::uint64_t>(t));
      for (auto& r : rows) r = rng.uniform_index(n);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees.push_back(
        build_gini_tree(x, labels, rows, params.max_depth, params.min_samples_leaf));
  }
  return model;
}

}  // namespace pdadsv
