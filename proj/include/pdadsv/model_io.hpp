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

#include <filesystem>
#include <iosfwd>

#include "json.hpp"
#include "pdadsv/harness.hpp"

namespace pdadsv {

// Schema v1:
// {format_version, scaler{mean[], std[]},
//  models[4]{mode, base_margin, learning_rate,
//            trees[]{nodes[]{feature, threshold, left, right} | {leaf}}},
//  weights[4], feature_names[32], metadata}
nlohmann::json model_to_json(const EnsembleModel& model);

// Throws kUnsupportedVersion, kSchemaViolation (message names the first
// offending field path).
EnsembleModel model_from_json(const nlohmann::json& doc);

void save_model(const EnsembleModel& model, std::ostream& out);
void save_model_file(const EnsembleModel& model, const std::filesystem::path& path);

// Unparseable text is a kSchemaViolation; an unreadable file is kIo.
EnsembleModel load_model(std::istream& in);
EnsembleModel load_model_file(const std::filesystem::path& path);

}  // namespace pdadsv
