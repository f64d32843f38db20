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


#include "pdadsv/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>

#include "pdadsv/error.hpp"

namespace pdadsv {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidConfig, "invalid value '" + value + "' for key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

using Setter = std::function<void(const std::string&, const std::string&, AppConfig&)>;

template <typename T, typename Field>
Setter num(Field field) {
  return [field](const std::string& k, const std::string& v, AppConfig& c) {
    field(c) = parse_number<T>(k, v);
  };
}

template <typename Field>
Setter flag(Field field) {
  return [field](const std::string& k, const std::string& v, AppConfig& c) {
    field(c) = parse_bool(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", num<std::uint64_t>([](AppConfig& c) -> auto& { return c.harness.seed; })},
      {"k", num<std::size_t>([](AppConfig& c) -> auto& { return c.k; })},
      {"grid", flag([](AppConfig& c) -> auto& { return c.harness.use_grid; })},
      {"lenient", flag([](AppConfig& c) -> auto& { return c.lenient; })},
      {"tree.max_depth", num<int>([](AppConfig& c) -> auto& { return c.harness.tree.max_depth; })},
      {"tree.min_samples_leaf",
       num<std::size_t>([](AppConfig& c) -> auto& { return c.harness.tree.min_samples_leaf; })},
      {"tree.lambda", num<double>([](AppConfig& c) -> auto& { return c.harness.tree.lambda; })},
      {"tree.gamma", num<double>([](AppConfig& c) -> auto& { return c.harness.tree.gamma; })},
      {"tree.learning_rate",
       num<double>([](AppConfig& c) -> auto& { return c.harness.tree.learning_rate; })},
      {"tree.n_rounds", num<int>([](AppConfig& c) -> auto& { return c.harness.tree.n_rounds; })},
      {"tree.colsample", num<double>([](AppConfig& c) -> auto& { return c.harness.tree.colsample; })},
      {"tree.max_bins",
       num<std::size_t>([](AppConfig& c) -> auto& { return c.harness.tree.max_bins; })},
      {"tree.goss", flag([](AppConfig& c) -> auto& { return c.harness.tree.goss; })},
      {"tree.goss_a", num<double>([](AppConfig& c) -> auto& { return c.harness.tree.goss_a; })},
      {"tree.goss_b", num<double>([](AppConfig& c) -> auto& { return c.harness.tree.goss_b; })},
      {"tree.efb", flag([](AppConfig& c) -> auto& { return c.harness.tree.efb; })},
      {"tree.efb_max_conflict",
       num<double>([](AppConfig& c) -> auto& { return c.harness.tree.efb_max_conflict; })},
      {"bagging.n_trees", num<int>([](AppConfig& c) -> auto& { return c.harness.bagging.n_trees; })},
      {"bagging.max_depth",
       num<int>([](AppConfig& c) -> auto& { return c.harness.bagging.max_depth; })},
      {"bagging.min_samples_leaf",
       num<std::size_t>([](AppConfig& c) -> auto& { return c.harness.bagging.min_samples_leaf; })},
      {"bagging.bootstrap", flag([](AppConfig& c) -> auto& { return c.harness.bagging.bootstrap; })},
      {"dsp.frame_len",
       num<std::size_t>([](AppConfig& c) -> auto& { return c.dsp.frame_len_samples; })},
      {"dsp.hop", num<std::size_t>([](AppConfig& c) -> auto& { return c.dsp.hop_samples; })},
      {"dsp.n_mel", num<std::size_t>([](AppConfig& c) -> auto& { return c.dsp.n_mel_filters; })},
      {"dsp.fmin_hz", num<double>([](AppConfig& c) -> auto& { return c.dsp.fmin_hz; })},
      {"dsp.delta_window", num<int>([](AppConfig& c) -> auto& { return c.dsp.delta_window; })},
      {"dsp.log_floor", num<double>([](AppConfig& c) -> auto& { return c.dsp.log_floor; })},
      {"dsp.pitch_min_hz", num<double>([](AppConfig& c) -> auto& { return c.dsp.hnr_pitch_min_hz; })},
      {"dsp.pitch_max_hz", num<double>([](AppConfig& c) -> auto& { return c.dsp.hnr_pitch_max_hz; })},
      {"dsp.hnr_cap_db", num<double>([](AppConfig& c) -> auto& { return c.dsp.hnr_cap_db; })},
      {"dsp.min_duration_s", num<double>([](AppConfig& c) -> auto& { return c.dsp.min_duration_s; })},
      {"dsp.fmax_hz",
       [](const std::string& k, const std::string& v, AppConfig& c) {
         c.dsp.fmax_hz = parse_number<double>(k, v);
       }},
  };
  return table;
}

}  // namespace

void apply_config_value(const std::string& key, const std::string& value, AppConfig& config) {
  if (key.starts_with("column.")) {
    if (value.empty() || !config.columns.set(key.substr(7), value)) {
      throw Error(ErrorCode::kInvalidConfig, "unknown column role in '" + key + "'");
    }
    return;
  }
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
  it->second(key, value, config);
}

void apply_config(std::istream& in, AppConfig& config) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_value(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), config);
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(const std::filesystem::path& path, AppConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open config file " + path.string());
  apply_config(in, config);
}

}  // namespace pdadsv
