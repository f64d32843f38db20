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
#include <filesystem>
#include <iosfwd>
#include <string>

#include "pdadsv/dataset.hpp"
#include "pdadsv/dsp.hpp"
#include "pdadsv/harness.hpp"

namespace pdadsv {

// Everything a config file can override.
struct AppConfig {
  HarnessConfig harness;
  DspConfig dsp;
  ColumnMapping columns;
  std::size_t k = 10;
  bool lenient = false;
};

// Flat `key = value` lines; '#' starts a comment. Keys:
//   seed, k, grid, lenient
//   tree.{max_depth, min_samples_leaf, lambda, gamma, learning_rate,
//         n_rounds, colsample, max_bins, goss, goss_a, goss_b, efb,
//         efb_max_conflict}
//   bagging.{n_trees, max_depth, min_samples_leaf, bootstrap}
//   dsp.{frame_len, hop, n_mel, fmin_hz, fmax_hz, delta_window, log_floor,
//        pitch_min_hz, pitch_max_hz, hnr_cap_db, min_duration_s}
//   column.<role> (see ColumnMapping::set)
// Throws kInvalidConfig naming the line for unknown keys or bad values.
void apply_config(std::istream& in, AppConfig& config);
void apply_config_file(const std::filesystem::path& path, AppConfig& config);

// One key; same errors as apply_config.
void apply_config_value(const std::string& key, const std::string& value, AppConfig& config);

}  // namespace pdadsv
