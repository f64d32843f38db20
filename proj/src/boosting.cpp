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
#include <string>

#include "pdadsv/error.hpp"
#include "pdadsv/gbdt.hpp"
#include "pdadsv/rng.hpp"

namespace pdadsv {
namespace {

void check_training_shape(const Matrix& x, std::span<const int> labels) {
  if (x.rows() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(x.rows()) + " rows but " + std::to_string(labels.size()) + " labels");
  }
  if (x.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "no training rows");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::kDimensionMismatch, "labels must be 0 or 1");
    (y == 1 ? pos : neg) = true;
  }
  if (!(pos && neg)) {
    throw Error(ErrorCode::kSingleClassDataset, "training data contains a single class");
  }
}

std::vector<std::size_t> sample_columns(std::size_t d, double colsample, std::uint64_t seed,
                                        int round) {
  std::vector<std::size_t> cols(d);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  if (colsample >= 1.0) return cols;
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(colsample * static_cast<double>(d) - 1e-9)));
  Rng rng = Rng::derive(seed, "colsample", static_cast<std::uint64_t>(round));
  for (std::size_t i = 0; i < keep; ++i) {
    std::swap(cols[i], cols[i + rng.uniform_index(d - i)]);
  }
  cols.resize(keep);
  std::sort(cols.begin(), cols.end());
  return cols;
}

}  // namespace

std::string_view boosting_mode_name(BoostingMode mode) {
  switch (mode) {
    case BoostingMode::kClassicGb: return "classic_gb";
    case BoostingMode::kSecondOrder: return "second_order";
    case BoostingMode::kHistogramGossEfb: return "histogram_goss_efb";
  }
  return "unknown";
}

std::optional<BoostingMode> parse_boosting_mode(std::string_view name) {
  for (auto m : {BoostingMode::kClassicGb, BoostingMode::kSecondOrder,
                 BoostingMode::kHistogramGossEfb}) {
    if (boosting_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

double sigmoid(double margin) {
  if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

GradHess logistic_grad_hess(int label, double margin) {
  const double p = sigmoid(margin);
  return {p - static_cast<double>(label), p * (1.0 - p)};
}

double log_loss(std::span<const int> labels, std::span<const double> probabilities) {
  constexpr double kEps = 1e-15;
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], kEps, 1.0 - kEps);
    acc -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return acc / static_cast<double>(labels.size());
}

double BoostedModel::predict_margin(std::span<const double> x) const {
  if (x.size() != feature_count) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(feature_count) + " features, got " +
                    std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return base_margin + learning_rate * sum;
}

double BoostedModel::predict_probability(std::span<const double> x) const {
  return sigmoid(predict_margin(x));
}

int BoostedModel::predict_label(std::span<const double> x) const {
  return predict_probability(x) >= 0.5 ? 1 : 0;
}

BoostedModel BoostedModel::truncated(std::size_t n_trees) const {
  BoostedModel out = *this;
  out.trees.resize(std::min(n_trees, trees.size()));
  return out;
}

BoostedModel fit_boosted(const Matrix& x, std::span<const int> labels, const TreeParams& params,
                         BoostingMode mode) {
  params.validate();
  check_training_shape(x, labels);
  const std::size_t n = x.rows();
  const double positives =
      static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double prior = positives / static_cast<double>(n);

  BoostedModel model;
  model.mode = mode;
  model.base_margin = std::log(prior / (1.0 - prior));
  model.learning_rate = params.learning_rate;
  model.feature_count = x.cols();

  std::optional<BinnedFeatures> binned;
  std::optional<FeatureBundles> bundles;
  if (mode == BoostingMode::kHistogramGossEfb) {
    binned = bin_features(x, params.max_bins);
    if (params.efb) bundles = efb_bundle(*binned, params.efb_max_conflict);
  }

  std::vector<double> margins(n, model.base_margin);
  std::vector<double> grad(n), hess(n);
  const std::vector<double> unit_hess(n, 1.0);
  std::vector<std::size_t> leaf_of;

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const GradHess gh = logistic_grad_hess(labels[i], margins[i]);
      grad[i] = gh.grad;
      hess[i] = gh.hess;
    }
    const std::vector<std::size_t> features =
        sample_columns(x.cols(), params.colsample, params.seed, round);

    DecisionTree tree;
    GrowInput in;
    in.grad = grad;
    in.features = features;
    switch (mode) {
      case BoostingMode::kClassicGb: {
        // Least-squares structure on the residuals, then a one-step Newton
        // line search per leaf: sum(y - p) / sum(p (1 - p)).
        TreeParams structure = params;
        structure.lambda = 0.0;
        structure.gamma = 0.0;
        in.x = &x;
        in.hess = unit_hess;
        tree = build_tree(in, structure, SplitMethod::kExact, &leaf_of);
        std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          num[leaf_of[i]] -= grad[i];
          den[leaf_of[i]] += hess[i];
        }
        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
          if (tree.nodes[k].is_leaf()) tree.nodes[k].value = den[k] > 0.0 ? num[k] / den[k] : 0.0;
        }
        break;
      }
      case BoostingMode::kSecondOrder:
        in.x = &x;
        in.hess = hess;
        tree = build_tree(in, params, SplitMethod::kExact);
        break;
      case BoostingMode::kHistogramGossEfb: {
        in.binned = &*binned;
        in.bundles = bundles ? &*bundles : nullptr;
        in.hess = hess;
        GossSample sample;
        if (params.goss) {
          const std::uint64_t goss_seed =
              Rng::derive(params.seed, "goss", static_cast<std::uint64_t>(round)).next_u64();
          sample = goss_sample(grad, params.goss_a, params.goss_b, goss_seed);
          in.rows = sample.indices;
          in.multipliers = sample.multipliers;
        }
        tree = build_tree(in, params, SplitMethod::kHistogram);
        break;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      margins[i] += params.learning_rate * tree.predict(x.row(i));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace pdadsv
