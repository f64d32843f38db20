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

#include "pdadsv/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include "pdadsv/error.hpp"
#include "pdadsv/rng.hpp"

namespace pdadsv {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> parse_number(std::string text, bool decimal_comma) {
  text = trim(text);
  if (decimal_comma) std::replace(text.begin(), text.end(), ',', '.');
  if (!text.empty() && text.front() == '+') text.erase(0, 1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

struct Header {
  char delimiter = ',';
  std::vector<std::string> columns;  // lower-cased, trimmed
};

// Comma-separated by default; a header with semicolons and no commas is
// read as the European export (';' separator, ',' decimal mark).
Header read_header(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) {
    throw Error(ErrorCode::kEmptyDataset, "CSV has no header row");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  Header h;
  if (line.find(',') == std::string::npos && line.find(';') != std::string::npos) {
    h.delimiter = ';';
  }
  for (auto& col : split_csv_line(line, h.delimiter)) h.columns.push_back(lower(trim(col)));
  return h;
}

std::size_t find_column(const Header& h, const std::string& name, const std::string& role) {
  const std::string key = lower(trim(name));
  const auto it = std::find(h.columns.begin(), h.columns.end(), key);
  if (it == h.columns.end()) {
    throw Error(ErrorCode::kMissingColumn,
                "column '" + name + "' (" + role + ") not found in CSV header");
  }
  return static_cast<std::size_t>(it - h.columns.begin());
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::vector<std::string> Dataset::subjects() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.subject_id).second) out.push_back(r.subject_id);
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records.at(i));
  return out;
}

bool Dataset::has_both_classes() const {
  bool pos = false, neg = false;
  for (const auto& r : records) (r.label == 1 ? pos : neg) = true;
  return pos && neg;
}

bool ColumnMapping::set(const std::string& role, const std::string& column) {
  const std::string key = lower(trim(role));
  if (key == "subject_id") {
    subject_id = column;
  } else if (key == "replication") {
    replication = column;
  } else if (key == "label") {
    label = column;
  } else {
    const auto& names = pdadsv::feature_names();
    const auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) return false;
    features[static_cast<std::size_t>(it - names.begin())] = column;
  }
  return true;
}

ColumnMapping load_column_mapping(std::istream& in) {
  ColumnMapping mapping;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "column mapping line " + std::to_string(line_no) + " lacks '='");
    }
    const std::string role = trim(t.substr(0, eq));
    if (!mapping.set(role, trim(t.substr(eq + 1)))) {
      throw Error(ErrorCode::kInvalidConfig, "unknown column role '" + role + "'");
    }
  }
  return mapping;
}

std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r' && c != '\n') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Dataset parse_dataset_csv(std::istream& in, const ColumnMapping& mapping,
                          const ParseOptions& options, std::vector<std::string>* warnings) {
  const Header header = read_header(in);
  const bool decimal_comma = header.delimiter == ';';
  const std::size_t id_col = find_column(header, mapping.subject_id, "subject_id");
  const std::size_t rep_col = find_column(header, mapping.replication, "replication");
  const std::size_t label_col = find_column(header, mapping.label, "label");
  std::array<std::size_t, kNumFeatures> feature_cols{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    feature_cols[f] = find_column(header, mapping.features[f], feature_names()[f]);
  }

  Dataset ds;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line, header.delimiter);
    auto field = [&](std::size_t col) -> const std::string& {
      if (col >= fields.size()) {
        throw Error(ErrorCode::kNonNumericValue,
                    "row " + std::to_string(row) + ": missing value for column '" +
                        header.columns[col] + "'");
      }
      return fields[col];
    };
    auto number = [&](std::size_t col) {
      const auto v = parse_number(field(col), decimal_comma);
      if (!v) {
        throw Error(ErrorCode::kNonNumericValue,
                    "row " + std::to_string(row) + ", column '" + header.columns[col] +
                        "': '" + trim(field(col)) + "' is not a finite number");
      }
      return *v;
    };

    Record rec;
    rec.subject_id = trim(field(id_col));
    const double rep = number(rep_col);
    if (rep != std::floor(rep)) {
      throw Error(ErrorCode::kNonNumericValue,
                  "row " + std::to_string(row) + ": replication index must be an integer");
    }
    rec.replication_idx = static_cast<int>(rep);
    const double label = number(label_col);
    if (label != 0.0 && label != 1.0) {
      throw Error(ErrorCode::kNonNumericValue,
                  "row " + std::to_string(row) + ": label must be 0 or 1");
    }
    rec.label = static_cast<int>(label);
    for (std::size_t f = 0; f < kNumFeatures; ++f) rec.features.values[f] = number(feature_cols[f]);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw Error(ErrorCode::kEmptyDataset, "CSV contains no data rows");

  // Per-subject replication and label checks.
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    by_subject[ds.records[i].subject_id].push_back(i);
  }
  std::set<std::string> rejected;
  for (const auto& [subject, rows] : by_subject) {
    std::set<int> reps;
    bool labels_agree = true;
    for (std::size_t i : rows) {
      reps.insert(ds.records[i].replication_idx);
      labels_agree &= ds.records[i].label == ds.records[rows.front()].label;
    }
    const bool reps_ok = rows.size() == kReplicationsPerSubject && reps == std::set<int>{1, 2, 3};
    if (reps_ok && labels_agree) continue;
    const std::string why =
        !reps_ok ? "subject '" + subject + "' has " + std::to_string(rows.size()) +
                       " records; expected replications 1, 2 and 3"
                 : "subject '" + subject + "' has records with different labels";
    if (options.strict) {
      throw Error(reps_ok ? ErrorCode::kInconsistentLabel : ErrorCode::kReplicationMismatch, why);
    }
    if (warnings) warnings->push_back(why + "; subject dropped");
    rejected.insert(subject);
  }
  if (!rejected.empty()) {
    std::erase_if(ds.records, [&](const Record& r) { return rejected.contains(r.subject_id); });
    if (ds.records.empty()) {
      throw Error(ErrorCode::kEmptyDataset, "no subject passed the replication checks");
    }
  }
  return ds;
}

std::vector<FeatureVector32> read_feature_csv(std::istream& in) {
  const Header header = read_header(in);
  const bool decimal_comma = header.delimiter == ';';
  std::array<std::size_t, kNumFeatures> cols{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    cols[f] = find_column(header, feature_names()[f], "feature");
  }
  std::vector<FeatureVector32> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, header.delimiter);
    FeatureVector32 v;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto num = cols[f] < fields.size() ? parse_number(fields[cols[f]], decimal_comma)
                                               : std::nullopt;
      if (!num) {
        throw Error(ErrorCode::kNonNumericValue,
                    "row " + std::to_string(rows.size() + 1) + ", column '" +
                        feature_names()[f] + "' is not a finite number");
      }
      v.values[f] = *num;
    }
    rows.push_back(v);
  }
  return rows;
}

FeatureVector32 ScalerParams::apply(const FeatureVector32& v) const {
  FeatureVector32 out;
  for (std::size_t i = 0; i < kNumFeatures; ++i) out.values[i] = (v.values[i] - mean[i]) / std[i];
  return out;
}

FeatureVector32 ScalerParams::invert(const FeatureVector32& v) const {
  FeatureVector32 out;
  for (std::size_t i = 0; i < kNumFeatures; ++i) out.values[i] = v.values[i] * std[i] + mean[i];
  return out;
}

ScalerParams fit_scaler(const Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return fit_scaler(ds, all);
}

ScalerParams fit_scaler(const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot fit a scaler on no records");
  ScalerParams p;
  const auto n = static_cast<double>(indices.size());
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double sum = 0.0;
    for (std::size_t i : indices) sum += ds.records.at(i).features.values[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i : indices) {
      const double d = ds.records[i].features.values[f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    p.mean[f] = mean;
    p.std[f] = sd < kStdFloor ? 1.0 : sd;
  }
  return p;
}

std::vector<std::vector<std::size_t>> grouped_folds(const Dataset& ds, std::size_t k,
                                                    std::uint64_t seed) {
  const std::vector<std::string> subjects = ds.subjects();
  if (k < 2 || k > subjects.size()) {
    throw Error(ErrorCode::kTooFewSubjects,
                "need 2 <= k <= number of subjects (k=" + std::to_string(k) +
                    ", subjects=" + std::to_string(subjects.size()) + ")");
  }
  std::unordered_map<std::string, int> subject_label;
  for (const auto& r : ds.records) subject_label.emplace(r.subject_id, r.label);

  std::unordered_map<std::string, std::size_t> fold_of;
  std::size_t dealer = 0;
  for (int cls : {0, 1}) {
    std::vector<std::string> group;
    for (const auto& s : subjects) {
      if (subject_label.at(s) == cls) group.push_back(s);
    }
    Rng rng = Rng::derive(seed, "grouped_folds", static_cast<std::uint64_t>(cls));
    for (std::size_t i = group.size(); i > 1; --i) {
      std::swap(group[i - 1], group[rng.uniform_index(i)]);
    }
    for (const auto& s : group) {
      fold_of[s] = dealer;
      dealer = (dealer + 1) % k;
    }
  }

  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    folds[fold_of.at(ds.records[i].subject_id)].push_back(i);
  }
  return folds;
}

std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : ds.records) {
    fnv_mix(h, r.subject_id.data(), r.subject_id.size());
    fnv_mix(h, &r.replication_idx, sizeof r.replication_idx);
    fnv_mix(h, &r.label, sizeof r.label);
    for (double v : r.features.values) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      fnv_mix(h, &bits, sizeof bits);
    }
  }
  return h;
}

}  // namespace pdadsv
