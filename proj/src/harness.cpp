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

#include "pdadsv/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "pdadsv/error.hpp"
#include "pdadsv/rng.hpp"

namespace pdadsv {
namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

Matrix scaled_matrix(const Dataset& ds, const ScalerParams& scaler) {
  Matrix x(ds.size(), kNumFeatures);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const FeatureVector32 v = scaler.apply(ds.records[i].features);
    std::copy(v.values.begin(), v.values.end(), x.row(i).begin());
  }
  return x;
}

std::vector<int> labels_of(const Dataset& ds) {
  std::vector<int> y;
  y.reserve(ds.size());
  for (const auto& r : ds.records) y.push_back(r.label);
  return y;
}

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> take(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

bool both_classes(std::span<const int> y) {
  return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

template <typename Model>
double accuracy_of(const Model& model, const Matrix& x, std::span<const int> y) {
  if (y.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) correct += model.predict_label(x.row(i)) == y[i];
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

TreeParams with_grid(TreeParams p, const GridPoint& g, std::uint64_t seed) {
  p.max_depth = g.max_depth;
  p.learning_rate = g.learning_rate;
  p.n_rounds = g.n_rounds;
  p.seed = seed;
  return p;
}

constexpr std::array<BoostingMode, 3> kBoostingModes{
    BoostingMode::kClassicGb, BoostingMode::kSecondOrder, BoostingMode::kHistogramGossEfb};

nlohmann::json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth == 1) {
    (predicted == 1 ? tp : fn) += 1;
  } else {
    (predicted == 1 ? fp : tn) += 1;
  }
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyEvaluation, "no evaluated records");
  const auto tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
  const auto fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
  Metrics m;
  m.accuracy = (tp + tn) / static_cast<double>(cm.total());
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.precision = ratio(tp, tp + fp);
  m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  m.mcc = ratio(tp * tn - fp * fn, den);
  return m;
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (int depth : {3, 4, 6}) {
    for (double lr : {0.05, 0.1}) {
      for (int rounds : {100, 200}) grid.push_back({depth, lr, rounds});
    }
  }
  return grid;
}

nlohmann::json to_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth},       {"min_samples_leaf", p.min_samples_leaf},
          {"lambda", p.lambda},             {"gamma", p.gamma},
          {"learning_rate", p.learning_rate}, {"n_rounds", p.n_rounds},
          {"colsample", p.colsample},       {"max_bins", p.max_bins},
          {"goss", p.goss},                 {"goss_a", p.goss_a},
          {"goss_b", p.goss_b},             {"efb", p.efb},
          {"efb_max_conflict", p.efb_max_conflict}};
}

nlohmann::json to_json(const BaggingParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"bootstrap", p.bootstrap}};
}

Prediction EnsembleModel::predict(const FeatureVector32& raw) const {
  const FeatureVector32 x = scaler.apply(raw);
  std::array<int, kNumClassifiers> votes{};
  std::array<double, kNumClassifiers> prob{};
  for (std::size_t m = 0; m < boosted.size(); ++m) {
    prob[m] = boosted[m].predict_probability(x.values);
    votes[m] = prob[m] >= 0.5 ? 1 : 0;
  }
  prob[3] = bagged.positive_vote_fraction(x.values);
  votes[3] = bagged.predict_label(x.values);
  Prediction p = hard_vote(votes, weights);
  p.probability = prob;
  return p;
}

std::string EnsembleModel::model_version() const {
  if (metadata.is_object() && metadata.contains("model_version") &&
      metadata["model_version"].is_string()) {
    return metadata["model_version"].get<std::string>();
  }
  return "unversioned";
}

FittedEnsemble fit_ensemble(const Dataset& train, const HarnessConfig& config, std::uint64_t seed) {
  if (!train.has_both_classes()) {
    throw Error(ErrorCode::kSingleClassDataset, "training portion contains a single class");
  }
  FittedEnsemble out;
  out.model.scaler = fit_scaler(train);
  const Matrix x = scaled_matrix(train, out.model.scaler);
  const std::vector<int> y = labels_of(train);

  const std::vector<GridPoint> grid =
      config.use_grid ? default_grid()
                      : std::vector<GridPoint>{{config.tree.max_depth, config.tree.learning_rate,
                                                config.tree.n_rounds}};
  const std::uint64_t fit_seed = Rng::derive(seed, "fit").next_u64();
  BaggingParams bagging = config.bagging;
  bagging.seed = Rng::derive(seed, "bagging").next_u64();

  // Inner subject-grouped 80/20 split of the training portion.
  std::vector<std::size_t> inner_train, inner_val;
  try {
    const auto folds = grouped_folds(train, 5, Rng::derive(seed, "inner").next_u64());
    inner_val = folds[0];
    std::vector<char> is_val(train.size(), 0);
    for (std::size_t i : inner_val) is_val[i] = 1;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (!is_val[i]) inner_train.push_back(i);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTooFewSubjects) throw;
  }
  const std::vector<int> y_fit = take(y, inner_train);
  out.inner_split_used = !inner_val.empty() && both_classes(y_fit);

  std::array<GridPoint, 3> selected;
  selected.fill(grid.front());
  if (out.inner_split_used) {
    const Matrix x_fit = take_rows(x, inner_train);
    const Matrix x_val = take_rows(x, inner_val);
    const std::vector<int> y_val = take(y, inner_val);

    for (std::size_t m = 0; m < kBoostingModes.size(); ++m) {
      // The first r trees of a longer run equal an r-round run, so each
      // (depth, rate) pair is fitted once at its largest round count.
      std::map<std::pair<int, double>, BoostedModel> fits;
      for (const GridPoint& g : grid) {
        const auto key = std::pair{g.max_depth, g.learning_rate};
        int rounds = 0;
        for (const GridPoint& h : grid) {
          if (h.max_depth == g.max_depth && h.learning_rate == g.learning_rate) {
            rounds = std::max(rounds, h.n_rounds);
          }
        }
        if (!fits.contains(key)) {
          GridPoint longest = g;
          longest.n_rounds = rounds;
          fits.emplace(key, fit_boosted(x_fit, y_fit, with_grid(config.tree, longest, fit_seed),
                                        kBoostingModes[m]));
        }
      }
      double best = -1.0;
      for (const GridPoint& g : grid) {
        const BoostedModel candidate =
            fits.at({g.max_depth, g.learning_rate}).truncated(static_cast<std::size_t>(g.n_rounds));
        const double acc = accuracy_of(candidate, x_val, y_val);
        if (acc > best) {
          best = acc;
          selected[m] = g;
        }
      }
      out.validation_accuracy[m] = best;
    }
    const BaggedModel bag = fit_bagging(x_fit, y_fit, bagging);
    out.validation_accuracy[3] = accuracy_of(bag, x_val, y_val);
    out.model.weights = compute_weights(out.validation_accuracy);
  }
  out.selected = selected;

  for (std::size_t m = 0; m < kBoostingModes.size(); ++m) {
    out.model.boosted[m] =
        fit_boosted(x, y, with_grid(config.tree, selected[m], fit_seed), kBoostingModes[m]);
  }
  out.model.bagged = fit_bagging(x, y, bagging);
  out.model.feature_names = train.feature_names;
  return out;
}

EnsembleModel train_final(const Dataset& ds, const HarnessConfig& config) {
  FittedEnsemble fitted = fit_ensemble(ds, config, config.seed);
  EnsembleModel& model = fitted.model;
  const std::uint64_t fingerprint = dataset_fingerprint(ds);
  nlohmann::json selected = nlohmann::json::array();
  for (const auto& g : fitted.selected) {
    selected.push_back(
        {{"max_depth", g.max_depth}, {"learning_rate", g.learning_rate}, {"n_rounds", g.n_rounds}});
  }
  model.metadata = {
      {"model_version", "v1-" + hex64(fingerprint ^ splitmix64(config.seed)).substr(0, 12)},
      {"seed", config.seed},
      {"dataset_fingerprint", hex64(fingerprint)},
      {"n_records", ds.size()},
      {"n_subjects", ds.subjects().size()},
      {"tree_params", to_json(config.tree)},
      {"bagging_params", to_json(config.bagging)},
      {"use_grid", config.use_grid},
      {"inner_split_used", fitted.inner_split_used},
      {"validation_accuracy", fitted.validation_accuracy},
      {"selected_params", selected},
      {"weighting", "accuracy_proportional"},
  };
  return model;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::uint64_t index_fingerprint(std::span<const std::size_t> sorted_indices) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i : sorted_indices) {
    auto v = static_cast<std::uint64_t>(i);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

CvReport cross_validate(const Dataset& ds, std::size_t k, const HarnessConfig& config) {
  const auto folds = grouped_folds(ds, k, config.seed);
  CvReport report;
  report.k = k;
  report.seed = config.seed;

  for (std::size_t f = 0; f < folds.size(); ++f) {
    FoldResult fr;
    fr.fold = f;
    fr.test_indices = folds[f];
    std::vector<char> in_test(ds.size(), 0);
    for (std::size_t i : folds[f]) in_test[i] = 1;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!in_test[i]) train_idx.push_back(i);
    }
    fr.n_train = train_idx.size();
    fr.n_test = folds[f].size();
    fr.train_fingerprint = index_fingerprint(train_idx);

    const Dataset train = ds.subset(train_idx);
    const FittedEnsemble fitted =
        fit_ensemble(train, config, Rng::derive(config.seed, "fold", f).next_u64());
    fr.validation_accuracy = fitted.validation_accuracy;
    fr.weights = fitted.model.weights;
    fr.selected = fitted.selected;

    std::array<std::size_t, kNumClassifiers> correct{};
    for (std::size_t i : folds[f]) {
      const Record& rec = ds.records[i];
      const Prediction p = fitted.model.predict(rec.features);
      fr.confusion.add(rec.label, p.final_label);
      for (std::size_t c = 0; c < kNumClassifiers; ++c) correct[c] += p.votes[c] == rec.label;
    }
    for (std::size_t c = 0; c < kNumClassifiers; ++c) {
      fr.classifier_accuracy[c] =
          fr.n_test ? static_cast<double>(correct[c]) / static_cast<double>(fr.n_test) : 0.0;
    }
    fr.metrics = compute_metrics(fr.confusion);
    report.folds.push_back(std::move(fr));
  }

  auto collect = [&](auto getter) {
    std::vector<double> v;
    for (const auto& fr : report.folds) v.push_back(getter(fr));
    return summarize(v);
  };
  report.accuracy = collect([](const FoldResult& r) { return r.metrics.accuracy; });
  report.sensitivity = collect([](const FoldResult& r) { return r.metrics.sensitivity; });
  report.specificity = collect([](const FoldResult& r) { return r.metrics.specificity; });
  report.f1 = collect([](const FoldResult& r) { return r.metrics.f1; });
  report.mcc = collect([](const FoldResult& r) { return r.metrics.mcc; });
  for (std::size_t c = 0; c < kNumClassifiers; ++c) {
    report.classifier_accuracy[c] =
        collect([c](const FoldResult& r) { return r.classifier_accuracy[c]; });
  }
  return report;
}

nlohmann::json CvReport::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["seed"] = seed;
  j["folds"] = nlohmann::json::array();
  for (const auto& fr : folds) {
    nlohmann::json f;
    f["fold"] = fr.fold;
    f["n_train"] = fr.n_train;
    f["n_test"] = fr.n_test;
    f["confusion"] = {{"tp", fr.confusion.tp}, {"tn", fr.confusion.tn},
                      {"fp", fr.confusion.fp}, {"fn", fr.confusion.fn}};
    f["accuracy"] = fr.metrics.accuracy;
    f["sensitivity"] = fr.metrics.sensitivity;
    f["specificity"] = fr.metrics.specificity;
    f["precision"] = fr.metrics.precision;
    f["f1"] = fr.metrics.f1;
    f["mcc"] = fr.metrics.mcc;
    f["weights"] = fr.weights.w;
    f["validation_accuracy"] = fr.validation_accuracy;
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t c = 0; c < kNumClassifiers; ++c) {
      per[std::string(classifier_names()[c])] = fr.classifier_accuracy[c];
    }
    f["classifier_accuracy"] = per;
    nlohmann::json sel = nlohmann::json::array();
    for (const auto& g : fr.selected) {
      sel.push_back({{"max_depth", g.max_depth},
                     {"learning_rate", g.learning_rate},
                     {"n_rounds", g.n_rounds}});
    }
    f["selected_params"] = sel;
    f["train_fingerprint"] = hex64(fr.train_fingerprint);
    j["folds"].push_back(f);
  }
  j["aggregate"] = {{"accuracy", summary_json(accuracy)},
                    {"sensitivity", summary_json(sensitivity)},
                    {"specificity", summary_json(specificity)},
                    {"f1", summary_json(f1)},
                    {"mcc", summary_json(mcc)}};
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClassifiers; ++c) {
    per[std::string(classifier_names()[c])] = summary_json(classifier_accuracy[c]);
  }
  j["aggregate"]["classifier_accuracy"] = per;
  return j;
}

std::string CvReport::to_text() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%4s %6s %7s %7s %7s %7s %7s | %6s %6s %6s %6s\n", "fold",
                "n_test", "acc", "sens", "spec", "f1", "mcc", "w_gb", "w_xgb", "w_lgbm", "w_bag");
  out << line;
  for (const auto& fr : folds) {
    std::snprintf(line, sizeof line,
                  "%4zu %6zu %7.4f %7.4f %7.4f %7.4f %7.4f | %6.4f %6.4f %6.4f %6.4f\n",
                  fr.fold + 1, fr.n_test, fr.metrics.accuracy, fr.metrics.sensitivity,
                  fr.metrics.specificity, fr.metrics.f1, fr.metrics.mcc, fr.weights.w[0],
                  fr.weights.w[1], fr.weights.w[2], fr.weights.w[3]);
    out << line;
  }
  std::snprintf(line, sizeof line, "%4s %6s %7.4f %7.4f %7.4f %7.4f %7.4f\n", "mean", "",
                accuracy.mean, sensitivity.mean, specificity.mean, f1.mean, mcc.mean);
  out << line;
  out << "per-classifier accuracy:";
  for (std::size_t c = 0; c < kNumClassifiers; ++c) {
    std::snprintf(line, sizeof line, " %s=%.4f", std::string(classifier_names()[c]).c_str(),
                  classifier_accuracy[c].mean);
    out << line;
  }
  out << '\n';
  std::snprintf(line, sizeof line,
                "mean accuracy: %.4f +/- %.4f (k=%zu, seed=%llu)\n", accuracy.mean, accuracy.std,
                k, static_cast<unsigned long long>(seed));
  out << line;
  return out.str();
}

}  // namespace pdadsv
