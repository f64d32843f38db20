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
#include <span>
#include <string_view>

namespace pdadsv {

inline constexpr std::size_t kNumClassifiers = 4;

// Fixed classifier order used by weights, votes and the model bundle.
enum class ClassifierId : std::size_t {
  kClassicGb = 0,
  kSecondOrder = 1,
  kHistogramGossEfb = 2,
  kBagging = 3,
};

// Stable ids: classic_gb, second_order, histogram_goss_efb, bagging.
const std::array<std::string_view, kNumClassifiers>& classifier_names();
// Human-facing names of the classifier families.
const std::array<std::string_view, kNumClassifiers>& classifier_display_names();

// Non-negative, summing to 1.
struct ClassifierWeights {
  std::array<double, kNumClassifiers> w{0.25, 0.25, 0.25, 0.25};

  bool valid() const;
  friend bool operator==(const ClassifierWeights&, const ClassifierWeights&) = default;
};

// Accuracy-proportional weights; all-zero accuracies give uniform weights.
// Accuracies outside [0, 1] throw kInvalidConfig.
ClassifierWeights compute_weights(std::span<const double, kNumClassifiers> accuracy);

struct Prediction {
  std::array<int, kNumClassifiers> votes{};
  double tally_positive = 0.0;
  double tally_negative = 0.0;
  int final_label = 0;
  // Informational only; the decision uses votes.
  std::array<double, kNumClassifiers> probability{};
};

// tally_positive = sum of weights voting 1 (summed in ascending weight order,
// so the result does not depend on classifier order); an exact tie is
// positive. Throws kInvalidVote.
Prediction hard_vote(std::span<const int, kNumClassifiers> votes, const ClassifierWeights& weights);

}  // namespace pdadsv
