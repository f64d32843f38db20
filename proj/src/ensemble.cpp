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

#include "pdadsv/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdadsv/error.hpp"

namespace pdadsv {

const std::array<std::string_view, kNumClassifiers>& classifier_names() {
  static constexpr std::array<std::string_view, kNumClassifiers> names{
      "classic_gb", "second_order", "histogram_goss_efb", "bagging"};
  return names;
}

const std::array<std::string_view, kNumClassifiers>& classifier_display_names() {
  static constexpr std::array<std::string_view, kNumClassifiers> names{
      "Gradient Boosting", "XGBoost", "LightGBM", "Bagging"};
  return names;
}

bool ClassifierWeights::valid() const {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= 1e-12;
}

ClassifierWeights compute_weights(std::span<const double, kNumClassifiers> accuracy) {
  double sum = 0.0;
  for (double a : accuracy) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "classifier accuracy must lie in [0, 1]");
    }
    sum += a;
  }
  ClassifierWeights out;
  if (sum <= 0.0) return out;
  for (std::size_t i = 0; i < kNumClassifiers; ++i) out.w[i] = accuracy[i] / sum;
  return out;
}

Prediction hard_vote(std::span<const int, kNumClassifiers> votes, const ClassifierWeights& weights) {
  if (!weights.valid()) {
    throw Error(ErrorCode::kInvalidConfig, "classifier weights must be non-negative and sum to 1");
  }
  Prediction p;
  std::vector<double> positive;
  for (std::size_t i = 0; i < kNumClassifiers; ++i) {
    if (votes[i] != 0 && votes[i] != 1) {
      throw Error(ErrorCode::kInvalidVote, "vote " + std::to_string(i) + " is not 0 or 1");
    }
    p.votes[i] = votes[i];
    if (votes[i] == 1) positive.push_back(weights.w[i]);
  }
  std::sort(positive.begin(), positive.end());
  for (double w : positive) p.tally_positive += w;
  p.tally_negative = 1.0 - p.tally_positive;
  p.final_label = p.tally_positive >= p.tally_negative ? 1 : 0;
  return p;
}

}  // namespace pdadsv
