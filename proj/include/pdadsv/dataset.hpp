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
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "pdadsv/features.hpp"

namespace pdadsv {

inline constexpr int kReplicationsPerSubject = 3;

struct Record {
  std::string subject_id;
  int replication_idx = 1;  // 1..3
  FeatureVector32 features;
  int label = 0;  // 0 = healthy, 1 = PD
};

struct Dataset {
  std::vector<Record> records;
  std::array<std::string, kNumFeatures> feature_names = pdadsv::feature_names();

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  // Subject ids in order of first appearance.
  std::vector<std::string> subjects() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  bool has_both_classes() const;
};

// Column roles -> CSV header names. Header matching is case-insensitive.
struct ColumnMapping {
  std::string subject_id = "ID";
  std::string replication = "Recording";
  std::string label = "Status";
  std::array<std::string, kNumFeatures> features = pdadsv::feature_names();

  // Layout of the public replicated-acoustic-features corpus.
  static ColumnMapping defaults() { return {}; }

  // Applies one `role = column` entry (subject_id, replication, label or a
  // canonical feature name). Returns false for an unknown role.
  bool set(const std::string& role, const std::string& column);
};

// Reads `role = column` lines ('#' comments allowed) on top of defaults.
// Throws kInvalidConfig on unknown roles or malformed lines.
ColumnMapping load_column_mapping(std::istream& in);

struct ParseOptions {
  // Strict: every subject must have exactly replications 1, 2 and 3 and a
  // single label. Lenient: offending subjects are dropped with a warning.
  bool strict = true;
};

// Throws kMissingColumn, kNonNumericValue, kReplicationMismatch,
// kInconsistentLabel, kEmptyDataset.
Dataset parse_dataset_csv(std::istream& in, const ColumnMapping& mapping = {},
                          const ParseOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);

// Rows of a 32-feature CSV (e.g. produced by `extract`), columns located by
// canonical name; extra columns ignored.
std::vector<FeatureVector32> read_feature_csv(std::istream& in);

// Splits one CSV line honoring double quotes. Exposed for tests.
std::vector<std::string> split_csv_line(const std::string& line, char delimiter);

struct ScalerParams {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> std{};

  FeatureVector32 apply(const FeatureVector32& v) const;
  FeatureVector32 invert(const FeatureVector32& v) const;
};

inline constexpr double kStdFloor = 1e-12;

// Population z-score statistics; std below 1e-12 is replaced by 1.0.
// Throws kEmptyDataset.
ScalerParams fit_scaler(const Dataset& ds);
ScalerParams fit_scaler(const Dataset& ds, std::span<const std::size_t> indices);

// k disjoint test-index sets. Whole subjects are assigned: subjects of each
// class are shuffled by seed and dealt round-robin, the dealer position
// carrying over between classes. Throws kTooFewSubjects.
std::vector<std::vector<std::size_t>> grouped_folds(const Dataset& ds, std::size_t k,
                                                    std::uint64_t seed);

// Order-sensitive FNV-1a hash of records (ids, replication, label, feature
// bit patterns).
std::uint64_t dataset_fingerprint(const Dataset& ds);

}  // namespace pdadsv
