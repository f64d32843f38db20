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
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdadsv/dataset.hpp"
#include "pdadsv/ensemble.hpp"
#include "pdadsv/gbdt.hpp"

namespace pdadsv {

// ---------------------------------------------------------------------------
// Metrics

struct ConfusionMatrix {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  void add(int truth, int predicted);
};

// Any zero denominator yields 0 for that metric.
struct Metrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

// Throws kEmptyEvaluation.
Metrics compute_metrics(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Training configuration

struct GridPoint {
  int max_depth = 4;
  double learning_rate = 0.1;
  int n_rounds = 200;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

// max_depth {3, 4, 6} x learning_rate {0.05, 0.1} x n_rounds {100, 200}.
std::vector<GridPoint> default_grid();

struct HarnessConfig {
  TreeParams tree;       // shared by the three boosting modes
  BaggingParams bagging;
  bool use_grid = true;  // select GridPoint per mode on the inner split
  std::uint64_t seed = 42;
};

nlohmann::json to_json(const TreeParams& p);
nlohmann::json to_json(const BaggingParams& p);

// ---------------------------------------------------------------------------
// Deployable bundle

inline constexpr int kModelFormatVersion = 1;

struct EnsembleModel {
  int format_version = kModelFormatVersion;
  ScalerParams scaler;
  std::array<BoostedModel, 3> boosted;  // classic_gb, second_order, histogram
  BaggedModel bagged;
  ClassifierWeights weights;
  std::array<std::string, kNumFeatures> feature_names = pdadsv::feature_names();
  nlohmann::json metadata = nlohmann::json::object();

  // Standardizes the raw vector, then votes.
  Prediction predict(const FeatureVector32& raw) const;
  std::string model_version() const;
};

// Output of fitting the four classifiers on one training portion.
struct FittedEnsemble {
  EnsembleModel model;
  std::array<double, kNumClassifiers> validation_accuracy{};
  std::array<GridPoint, 3> selected{};
  bool inner_split_used = false;
};

// Scaler on `train`; inner subject-grouped 80/20 split for grid selection and
// weight estimation; final refit of all four on the whole of `train`.
FittedEnsemble fit_ensemble(const Dataset& train, const HarnessConfig& config,
                            std::uint64_t seed);

// fit_ensemble on the full dataset plus bundle metadata.
EnsembleModel train_final(const Dataset& ds, const HarnessConfig& config);

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  ConfusionMatrix confusion;
  Metrics metrics;
  std::array<double, kNumClassifiers> classifier_accuracy{};  // on the test fold
  std::array<double, kNumClassifiers> validation_accuracy{};  // inner split
  ClassifierWeights weights;
  std::array<GridPoint, 3> selected{};
  std::uint64_t train_fingerprint = 0;  // hash of the sorted training indices
  std::vector<std::size_t> test_indices;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across folds
};

Summary summarize(const std::vector<double>& values);

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  Summary accuracy, sensitivity, specificity, f1, mcc;
  std::array<Summary, kNumClassifiers> classifier_accuracy{};

  nlohmann::json to_json() const;
  std::string to_text() const;
};

std::uint64_t index_fingerprint(std::span<const std::size_t> sorted_indices);

// Subject-grouped stratified k-fold. Each fold is independent and seeded by
// (seed, fold index). k == number of subjects gives leave-one-subject-out.
CvReport cross_validate(const Dataset& ds, std::size_t k, const HarnessConfig& config);

}  // namespace pdadsv
