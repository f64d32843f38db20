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


#include "pdadsv/model_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "pdadsv/error.hpp"

namespace pdadsv {
namespace {

using nlohmann::json;

constexpr std::string_view kBaggingMode = "bagging";

[[noreturn]] void violation(const std::string& what) {
  throw Error(ErrorCode::kSchemaViolation, what);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) violation("expected object at '" + path + "'");
  auto it = obj.find(key);
  if (it == obj.end()) {
    violation("missing field '" + (path.empty() ? std::string(key) : path + "." + key) + "'");
  }
  return *it;
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

double number(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number()) violation("field '" + join(path, key) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) violation("field '" + join(path, key) + "' must be finite");
  return d;
}

long long integer(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer()) violation("field '" + join(path, key) + "' must be an integer");
  return v.get<long long>();
}

const json& array(const json& obj, const char* key, const std::string& path,
                  std::optional<std::size_t> size = std::nullopt) {
  const json& v = field(obj, key, path);
  if (!v.is_array()) violation("field '" + join(path, key) + "' must be an array");
  if (size && v.size() != *size) {
    violation("field '" + join(path, key) + "' must have " + std::to_string(*size) +
              " entries, got " + std::to_string(v.size()));
  }
  return v;
}

template <std::size_t N>
std::array<double, N> numbers(const json& obj, const char* key, const std::string& path) {
  const json& v = array(obj, key, path, N);
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      violation("field '" + join(path, key) + "[" + std::to_string(i) + "]' must be a finite number");
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", n.value}});
    } else {
      nodes.push_back(
          {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return {{"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j, const std::string& path) {
  const json& nodes = array(j, "nodes", path);
  if (nodes.empty()) violation("field '" + path + ".nodes' must not be empty");
  DecisionTree tree;
  tree.nodes.resize(nodes.size());
  std::vector<int> parents(nodes.size(), 0);
  const auto n = static_cast<long long>(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string np = path + ".nodes[" + std::to_string(i) + "]";
    const json& node = nodes[i];
    TreeNode& out = tree.nodes[i];
    if (node.is_object() && node.contains("leaf")) {
      out.value = number(node, "leaf", np);
      continue;
    }
    const long long feature = integer(node, "feature", np);
    out.threshold = number(node, "threshold", np);
    const long long left = integer(node, "left", np);
    const long long right = integer(node, "right", np);
    if (feature < 0 || feature >= static_cast<long long>(kNumFeatures)) {
      violation("field '" + np + ".feature' out of range");
    }
    const auto self = static_cast<long long>(i);
    if (left <= self || left >= n || right <= self || right >= n || left == right) {
      violation("field '" + np + "' has invalid child indices");
    }
    out.feature = static_cast<int>(feature);
    out.left = static_cast<int>(left);
    out.right = static_cast<int>(right);
    ++parents[static_cast<std::size_t>(left)];
    ++parents[static_cast<std::size_t>(right)];
  }
  for (std::size_t i = 1; i < parents.size(); ++i) {
    if (parents[i] != 1) {
      violation("field '" + path + ".nodes[" + std::to_string(i) + "]' is not referenced exactly once");
    }
  }
  return tree;
}

json model_entry(std::string_view mode, double base_margin, double learning_rate,
                 const std::vector<DecisionTree>& trees) {
  json t = json::array();
  for (const auto& tree : trees) t.push_back(tree_to_json(tree));
  return {{"mode", mode}, {"base_margin", base_margin}, {"learning_rate", learning_rate},
          {"trees", std::move(t)}};
}

std::vector<DecisionTree> trees_from_json(const json& entry, const std::string& path) {
  const json& trees = array(entry, "trees", path);
  std::vector<DecisionTree> out;
  out.reserve(trees.size());
  for (std::size_t t = 0; t < trees.size(); ++t) {
    out.push_back(tree_from_json(trees[t], path + ".trees[" + std::to_string(t) + "]"));
  }
  return out;
}

}  // namespace

nlohmann::json model_to_json(const EnsembleModel& model) {
  json doc;
  doc["format_version"] = model.format_version;
  doc["scaler"] = {{"mean", model.scaler.mean}, {"std", model.scaler.std}};
  json models = json::array();
  for (const BoostedModel& m : model.boosted) {
    models.push_back(model_entry(boosting_mode_name(m.mode), m.base_margin, m.learning_rate, m.trees));
  }
  models.push_back(model_entry(kBaggingMode, 0.0, 1.0, model.bagged.trees));
  doc["models"] = std::move(models);
  doc["weights"] = model.weights.w;
  doc["feature_names"] = model.feature_names;
  doc["metadata"] = model.metadata;
  return doc;
}

EnsembleModel model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) violation("document root must be an object");
  const long long version = integer(doc, "format_version", "");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported model format_version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  EnsembleModel model;
  model.format_version = static_cast<int>(version);

  const json& scaler = field(doc, "scaler", "");
  model.scaler.mean = numbers<kNumFeatures>(scaler, "mean", "scaler");
  model.scaler.std = numbers<kNumFeatures>(scaler, "std", "scaler");
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!(model.scaler.std[i] > 0.0)) violation("field 'scaler.std[" + std::to_string(i) + "]' must be positive");
  }

  const json& models = array(doc, "models", "", kNumClassifiers);
  for (std::size_t m = 0; m < kNumClassifiers; ++m) {
    const std::string path = "models[" + std::to_string(m) + "]";
    const json& entry = models[m];
    const json& mode = field(entry, "mode", path);
    if (!mode.is_string() || mode.get<std::string>() != classifier_names()[m]) {
      violation("field '" + path + ".mode' must be \"" + std::string(classifier_names()[m]) + "\"");
    }
    const double base = number(entry, "base_margin", path);
    const double lr = number(entry, "learning_rate", path);
    std::vector<DecisionTree> trees = trees_from_json(entry, path);
    if (m < 3) {
      BoostedModel& b = model.boosted[m];
      b.mode = *parse_boosting_mode(mode.get<std::string>());
      b.base_margin = base;
      b.learning_rate = lr;
      b.feature_count = kNumFeatures;
      b.trees = std::move(trees);
    } else {
      if (trees.empty()) violation("field '" + path + ".trees' must not be empty");
      model.bagged.feature_count = kNumFeatures;
      model.bagged.trees = std::move(trees);
    }
  }

  model.weights.w = numbers<kNumClassifiers>(doc, "weights", "");
  if (!model.weights.valid()) violation("field 'weights' must be non-negative and sum to 1");

  const json& names = array(doc, "feature_names", "", kNumFeatures);
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!names[i].is_string()) violation("field 'feature_names[" + std::to_string(i) + "]' must be a string");
    model.feature_names[i] = names[i].get<std::string>();
  }

  const json& metadata = field(doc, "metadata", "");
  if (!metadata.is_object()) violation("field 'metadata' must be an object");
  model.metadata = metadata;
  return model;
}

void save_model(const EnsembleModel& model, std::ostream& out) {
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed to write model");
}

void save_model_file(const EnsembleModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  save_model(model, out);
}

EnsembleModel load_model(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    violation(std::string("model document is not valid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

EnsembleModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model " + path.string());
  return load_model(in);
}

}  // namespace pdadsv
