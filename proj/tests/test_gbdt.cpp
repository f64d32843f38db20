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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <map>
#include <set>

#include "doctest.h"
#include "pdadsv/error.hpp"
#include "pdadsv/gbdt.hpp"
#include "pdadsv/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace pdadsv;
using namespace pdadsv::oracles;


TEST_CASE("split gain formula") {
  const double g = split_gain(-3.0, 2.0, 1.0, 4.0, 1.0, 0.5);
  CHECK(g == doctest::Approx(0.5 * (9.0 / 3.0 + 1.0 / 5.0 - 4.0 / 7.0) - 0.5));
  // Zero denominators contribute nothing.
  CHECK(split_gain(1.0, 0.0, -1.0, 0.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("exact split equals exhaustive enumeration on 200 random datasets") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(19);
    const std::size_t d = 1 + rng.uniform_index(5);
    const Problem p = random_problem(rng, n, d, trial % 2 == 0);
    TreeParams params;
    params.lambda = rng.uniform01() * 2.0;
    params.gamma = (trial % 4 == 0) ? rng.uniform01() * 0.2 : 0.0;
    params.min_samples_leaf = 1 + rng.uniform_index(3);
    const auto got = find_best_split_exact(p.x, p.g, p.h, params);
    const auto want = brute_force_split(p, params);
    REQUIRE(got.has_value() == want.has_value());
    if (!want) continue;
    CHECK(got->feature == want->feature);
    CHECK(got->threshold == want->threshold);
    CHECK(std::abs(got->gain - want->gain) <= 1e-9);
  }
}

TEST_CASE("single-column exact split ties go to the lower threshold") {
  // Symmetric gradients make both thresholds equally good.
  const std::vector<double> v{0.0, 1.0, 2.0};
  const std::vector<double> g{1.0, 0.0, -1.0};
  const std::vector<double> h{1.0, 1.0, 1.0};
  TreeParams params;
  params.lambda = 0.0;
  params.min_samples_leaf = 1;
  const auto s = best_split_exact(v, g, h, params);
  REQUIRE(s);
  CHECK(s->threshold == 0.5);
}

TEST_CASE("binning invariant: bin(x) <= b iff x < cuts[b]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(rng, 300, 3);
    const std::size_t max_bins = 2 + rng.uniform_index(40);
    const BinnedFeatures b = bin_features(x, max_bins);
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(b.n_bins(f) <= max_bins);
      CHECK(std::is_sorted(b.cuts[f].begin(), b.cuts[f].end()));
      for (std::size_t i = 0; i < 300; ++i) {
        const std::uint32_t bin = b.bins[f][i];
        CHECK(bin == b.bin_of(f, x(i, f)));
        for (std::size_t c = 0; c < b.cuts[f].size(); ++c) {
          CHECK((bin <= c) == (x(i, f) < b.cuts[f][c]));
        }
      }
    }
  }
}

TEST_CASE("histogram best split equals exact best split when values fit in bins") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng.uniform_index(200);
    const std::size_t d = 1 + rng.uniform_index(6);
    Problem p = random_problem(rng, n, d, false);
    const std::size_t distinct = 2 + rng.uniform_index(30);
    for (double& v : const_cast<std::vector<double>&>(p.x.data())) {
      v = std::round(v * static_cast<double>(distinct) / 4.0);  // limited distinct set
    }
    TreeParams params;
    params.max_bins = 64;
    params.lambda = rng.uniform01();
    params.min_samples_leaf = 1 + rng.uniform_index(4);
    const BinnedFeatures binned = bin_features(p.x, params.max_bins);
    bool fits = true;
    for (std::size_t f = 0; f < d; ++f) {
      std::set<double> vals;
      for (std::size_t i = 0; i < n; ++i) vals.insert(p.x(i, f));
      fits &= vals.size() <= params.max_bins;
      CHECK(binned.n_bins(f) == vals.size());
    }
    REQUIRE(fits);
    const auto exact = find_best_split_exact(p.x, p.g, p.h, params);
    const auto hist = find_best_split_histogram(binned, p.g, p.h, params);
    REQUIRE(exact.has_value() == hist.has_value());
    if (!exact) continue;
    CHECK(hist->feature == exact->feature);
    CHECK(hist->threshold == exact->threshold);
    CHECK(std::abs(hist->gain - exact->gain) <= 1e-9);
  }
}

TEST_CASE("GOSS selection sizes, weights and ordering") {
  Rng rng(8);
  std::vector<double> g(103);
  for (double& v : g) v = rng.normal();
  const GossSample s = goss_sample(g, 0.2, 0.1, 77);
  CHECK(s.indices.size() == 21 + 11);
  CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(g[a]) > std::abs(g[b]); });
  const std::set<std::size_t> top(order.begin(), order.begin() + 21);
  std::size_t n_top = 0;
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    if (top.contains(s.indices[k])) {
      ++n_top;
      CHECK(s.multipliers[k] == 1.0);
    } else {
      CHECK(s.multipliers[k] == doctest::Approx(0.8 / 0.1));
    }
  }
  CHECK(n_top == 21);
  CHECK_THROWS_AS(goss_sample(g, 0.7, 0.5, 1), Error);
  CHECK(goss_sample(g, 0.2, 0.1, 77).indices == s.indices);
}

TEST_CASE("GOSS with a=1, b=0 gives a bit-identical model to no sampling") {
  Rng rng(10);
  const Matrix x = random_matrix(rng, 150, 6);
  std::vector<int> y = separable_labels(x);
  for (std::size_t i = 0; i < y.size(); i += 7) y[i] = 1 - y[i];  // label noise
  TreeParams params;
  params.n_rounds = 30;
  params.goss = false;
  const BoostedModel plain = fit_boosted(x, y, params, BoostingMode::kHistogramGossEfb);
  params.goss = true;
  params.goss_a = 1.0;
  params.goss_b = 0.0;
  const BoostedModel degenerate = fit_boosted(x, y, params, BoostingMode::kHistogramGossEfb);
  CHECK(plain == degenerate);
}

TEST_CASE("EFB with zero conflicts roundtrips and leaves models unchanged (100 datasets)") {
  Rng rng(11);
  std::size_t bundled_somewhere = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 40 + rng.uniform_index(80);
    const std::size_t d = 3 + rng.uniform_index(10);
    const Matrix x = sparse_exclusive(rng, n, d, 2 + rng.uniform_index(3));
    const BinnedFeatures binned = bin_features(x, 255);
    const FeatureBundles bundles = efb_bundle(binned, 0.0);
    CHECK(bundles.decode_all() == binned.bins);
    for (std::size_t f = 0; f < d; ++f) {
      for (std::size_t i = 0; i < n; i += 5) CHECK(bundles.decode(f, i) == binned.bins[f][i]);
    }
    if (bundles.bundles.size() < d) ++bundled_somewhere;

    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (x(i, 0) + x(i, 1) + (i % 5 == 0)) > 1.0 ? 1 : 0;
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) y[0] = 1 - y[0];
    TreeParams params;
    params.n_rounds = 8;
    params.goss = trial % 2 == 0;
    params.efb = false;
    const BoostedModel without = fit_boosted(x, y, params, BoostingMode::kHistogramGossEfb);
    params.efb = true;
    const BoostedModel with = fit_boosted(x, y, params, BoostingMode::kHistogramGossEfb);
    CHECK(with == without);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(with.predict_margin(x.row(i)) == without.predict_margin(x.row(i)));
    }
  }
  CHECK(bundled_somewhere > 50);
}

TEST_CASE("EFB keeps conflicting features apart at zero tolerance") {
  Matrix x(4, 2, 0.0);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  x(2, 0) = 2.0;
  x(2, 1) = 2.0;  // conflict
  const BinnedFeatures b = bin_features(x, 255);
  CHECK(efb_bundle(b, 0.0).bundles.size() == 2);
  CHECK(efb_bundle(b, 0.25).bundles.size() == 1);
}

TEST_CASE("logistic gradients match finite differences of the log-loss") {
  auto loss = [](int y, double m) {
    const double p = sigmoid(m);
    return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
  };
  for (int y : {0, 1}) {
    for (double m : {-4.0, -1.0, -0.1, 0.0, 0.3, 2.0, 5.0}) {
      const double eps = 1e-5;
      const GradHess gh = logistic_grad_hess(y, m);
      const double g_num = (loss(y, m + eps) - loss(y, m - eps)) / (2 * eps);
      auto g_at = [&](double mm) { return (loss(y, mm + eps) - loss(y, mm - eps)) / (2 * eps); };
      const double h_num = (g_at(m + 1e-3) - g_at(m - 1e-3)) / 2e-3;
      CHECK(gh.grad == doctest::Approx(g_num).epsilon(1e-6));
      CHECK(gh.hess == doctest::Approx(h_num).epsilon(1e-4));
    }
  }
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(log_loss(std::vector<int>{1, 0}, std::vector<double>{0.0, 1.0})));
}

TEST_CASE("leaf weight is -G/(H+lambda) when no split is allowed") {
  Rng rng(12);
  const Problem p = random_problem(rng, 10, 2, false);
  TreeParams params;
  params.lambda = 0.7;
  params.min_samples_leaf = 6;
  GrowInput in;
  in.x = &p.x;
  in.grad = p.g;
  in.hess = p.h;
  const DecisionTree t = build_tree(in, params, SplitMethod::kExact);
  REQUIRE(t.nodes.size() == 1);
  const double G = std::accumulate(p.g.begin(), p.g.end(), 0.0);
  const double H = std::accumulate(p.h.begin(), p.h.end(), 0.0);
  CHECK(t.nodes[0].value == doctest::Approx(-G / (H + 0.7)));
}

TEST_CASE("tree growth respects depth and leaf size") {
  Rng rng(13);
  const Problem p = random_problem(rng, 200, 4, false);
  TreeParams params;
  params.max_depth = 3;
  params.min_samples_leaf = 7;
  GrowInput in;
  in.x = &p.x;
  in.grad = p.g;
  in.hess = p.h;
  std::vector<std::size_t> leaf_of;
  const DecisionTree t = build_tree(in, params, SplitMethod::kExact, &leaf_of);
  CHECK(t.depth() <= 3);
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t i = 0; i < 200; ++i) {
    ++counts[leaf_of[i]];
    CHECK(t.leaf_index(p.x.row(i)) == leaf_of[i]);
  }
  for (const auto& [leaf, c] : counts) CHECK(c >= 7);
}

TEST_CASE("boosting log-loss strictly decreases for 10 rounds in every mode") {
  Rng rng(14);
  const Matrix x = random_matrix(rng, 100, 4);
  const std::vector<int> y = separable_labels(x);
  for (BoostingMode mode : {BoostingMode::kClassicGb, BoostingMode::kSecondOrder,
                            BoostingMode::kHistogramGossEfb}) {
    TreeParams params;
    params.learning_rate = 0.1;
    params.gamma = 0.0;
    params.n_rounds = 10;
    const BoostedModel m = fit_boosted(x, y, params, mode);
    REQUIRE(m.trees.size() == 10);
    double prev = model_log_loss(m.truncated(0), x, y);
    for (std::size_t r = 1; r <= 10; ++r) {
      const double cur = model_log_loss(m.truncated(r), x, y);
      CHECK_MESSAGE(cur < prev, boosting_mode_name(mode), " round ", r);
      prev = cur;
    }
  }
}

TEST_CASE("classic mode leaves hold the Newton line-search value") {
  Rng rng(15);
  const Matrix x = random_matrix(rng, 80, 3);
  std::vector<int> y = separable_labels(x);
  for (std::size_t i = 0; i < y.size(); i += 5) y[i] = 1 - y[i];
  TreeParams params;
  params.n_rounds = 1;
  params.max_depth = 2;
  const BoostedModel m = fit_boosted(x, y, params, BoostingMode::kClassicGb);
  const double p0 = sigmoid(m.base_margin);
  std::map<std::size_t, std::pair<double, double>> acc;
  for (std::size_t i = 0; i < 80; ++i) {
    auto& [num, den] = acc[m.trees[0].leaf_index(x.row(i))];
    num += y[i] - p0;
    den += p0 * (1 - p0);
  }
  for (const auto& [leaf, nd] : acc) {
    CHECK(m.trees[0].nodes[leaf].value == doctest::Approx(nd.first / nd.second));
  }
  const double prior = std::count(y.begin(), y.end(), 1) / 80.0;
  CHECK(m.base_margin == doctest::Approx(std::log(prior / (1 - prior))));
}

TEST_CASE("boosting is deterministic and validates inputs") {
  Rng rng(16);
  const Matrix x = random_matrix(rng, 60, 5);
  const std::vector<int> y = separable_labels(x);
  TreeParams params;
  params.n_rounds = 20;
  params.colsample = 0.6;
  for (BoostingMode mode : {BoostingMode::kClassicGb, BoostingMode::kSecondOrder,
                            BoostingMode::kHistogramGossEfb}) {
    CHECK(fit_boosted(x, y, params, mode) == fit_boosted(x, y, params, mode));
  }
  const std::vector<int> ones(60, 1);
  try {
    fit_boosted(x, ones, params, BoostingMode::kSecondOrder);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingleClassDataset);
  }
  const BoostedModel m = fit_boosted(x, y, params, BoostingMode::kSecondOrder);
  const std::vector<double> short_row(4, 0.0);
  CHECK_THROWS_AS(m.predict_margin(short_row), Error);
  params.goss_a = 0.8;
  params.goss_b = 0.5;
  try {
    params.validate();
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidFractions);
  }
}

TEST_CASE("mode names roundtrip") {
  for (BoostingMode mode : {BoostingMode::kClassicGb, BoostingMode::kSecondOrder,
                            BoostingMode::kHistogramGossEfb}) {
    CHECK(parse_boosting_mode(boosting_mode_name(mode)) == mode);
  }
  CHECK_FALSE(parse_boosting_mode("xgboost").has_value());
}

TEST_CASE("majority vote ties go positive") {
  CHECK(majority_vote(std::vector<int>{1, 0}) == 1);
  CHECK(majority_vote(std::vector<int>{0, 0, 1}) == 0);
  CHECK(majority_vote(std::vector<int>{1, 1, 0}) == 1);
}

TEST_CASE("gini root split maximizes brute-force Gini decrease") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 6 + rng.uniform_index(30);
    Matrix x(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < 3; ++j) x(i, j) = static_cast<double>(rng.uniform_index(8));
      y[i] = static_cast<int>(rng.uniform_index(2));
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const DecisionTree t = build_gini_tree(x, y, rows, 1, 1);
    auto gini = [](double pos, double cnt) { return cnt > 0 ? 1.0 - (pos / cnt) * (pos / cnt) - (1 - pos / cnt) * (1 - pos / cnt) : 0.0; };
    double total_pos = std::count(y.begin(), y.end(), 1);
    double best = 0.0;
    for (std::size_t f = 0; f < 3; ++f) {
      for (int v = 0; v < 8; ++v) {
        const double thr = v + 0.5;
        double lp = 0, lc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (x(i, f) < thr) lc += 1, lp += y[i];
        }
        if (lc == 0 || lc == static_cast<double>(n)) continue;
        const double dec = n * gini(total_pos, n) - lc * gini(lp, lc) - (n - lc) * gini(total_pos - lp, n - lc);
        best = std::max(best, dec);
      }
    }
    if (best <= 1e-9) {
      CHECK(t.nodes.size() == 1);
      continue;
    }
    REQUIRE(t.nodes.size() == 3);
    const auto f = static_cast<std::size_t>(t.nodes[0].feature);
    double lp = 0, lc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x(i, f) < t.nodes[0].threshold) lc += 1, lp += y[i];
    }
    const double dec = n * gini(total_pos, n) - lc * gini(lp, lc) - (n - lc) * gini(total_pos - lp, n - lc);
    CHECK(dec == doctest::Approx(best).epsilon(1e-9));
    // Leaves hold the positive fraction.
    CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value == doctest::Approx(lp / lc));
  }
}

TEST_CASE("bagging fits separable data and is seed-deterministic") {
  Rng rng(18);
  const Matrix x = random_matrix(rng, 120, 4);
  const std::vector<int> y = separable_labels(x);
  BaggingParams params;
  params.n_trees = 25;
  const BaggedModel a = fit_bagging(x, y, params);
  CHECK(a == fit_bagging(x, y, params));
  params.seed = 7;
  CHECK_FALSE(a == fit_bagging(x, y, params));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 120; ++i) {
    correct += a.predict_label(x.row(i)) == y[i];
    const auto v = a.votes(x.row(i));
    CHECK(v.size() == 25);
    CHECK(a.positive_vote_fraction(x.row(i)) ==
          doctest::Approx(std::count(v.begin(), v.end(), 1) / 25.0));
  }
  CHECK(correct >= 115);

  // Without bootstrap a single tree is the full Gini tree.
  params.bootstrap = false;
  params.n_trees = 1;
  std::vector<std::size_t> rows(120);
  std::iota(rows.begin(), rows.end(), 0);
  CHECK(fit_bagging(x, y, params).trees[0] ==
        build_gini_tree(x, y, rows, params.max_depth, params.min_samples_leaf));
}

TEST_CASE("logistic gradient worked values and 1000 random finite differences") {
  CHECK(logistic_grad_hess(1, 0.0).grad == -0.5);
  CHECK(logistic_grad_hess(1, 0.0).hess == 0.25);
  CHECK(logistic_grad_hess(0, 0.0).grad == 0.5);
  CHECK(logistic_grad_hess(0, 0.0).hess == 0.25);
  auto loss = [](int y, double m) {
    // log(1 + e^m) - y*m, written stably.
    return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))) - y * m;
  };
  Rng rng(19);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int y = static_cast<int>(rng.uniform_index(2));
    const double m = 12.0 * rng.uniform01() - 6.0;
    const double eps = 1e-5;
    const double fd = (loss(y, m + eps) - loss(y, m - eps)) / (2 * eps);
    worst = std::max(worst, std::abs(fd - logistic_grad_hess(y, m).grad));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("split gain worked examples") {
  CHECK(split_gain(0.0, 1.0, 0.0, 2.0, 1.0, 0.3) == doctest::Approx(-0.3));
  // y = [0,0,1,1] at p = 0.5: GL = 1, GR = -1, HL = HR = 0.5.
  CHECK(split_gain(1.0, 0.5, -1.0, 0.5, 0.0, 0.0) == doctest::Approx(2.0));
  CHECK(std::abs(split_gain(1.0, 0.5, -1.0, 0.5, 1e12, 0.2) + 0.2) < 1e-6);
}

TEST_CASE("exact split worked examples") {
  TreeParams params;
  params.lambda = 0.0;
  params.min_samples_leaf = 1;
  const std::vector<double> g{0.5, 0.5, -0.5, -0.5};
  const std::vector<double> h(4, 0.25);
  CHECK_FALSE(best_split_exact(std::vector<double>(4, 3.0), g, h, params).has_value());
  const auto s = best_split_exact(std::vector<double>{1.0, 2.0, 3.0, 4.0}, g, h, params);
  REQUIRE(s.has_value());
  CHECK(s->threshold > 2.0);
  CHECK(s->threshold < 3.0);
  CHECK(s->gain == doctest::Approx(2.0));
}

TEST_CASE("tree boundary cases and routing") {
  Rng rng(20);
  const Problem p = random_problem(rng, 40, 3, false);
  GrowInput in;
  in.x = &p.x;
  in.grad = p.g;
  in.hess = p.h;
  TreeParams params;
  params.max_depth = 0;
  params.lambda = 0.4;
  const DecisionTree stump = build_tree(in, params, SplitMethod::kExact);
  REQUIRE(stump.nodes.size() == 1);
  const double G = std::accumulate(p.g.begin(), p.g.end(), 0.0);
  const double H = std::accumulate(p.h.begin(), p.h.end(), 0.0);
  CHECK(stump.nodes[0].value == doctest::Approx(-G / (H + 0.4)));

  // Balanced labels at p = 0.5 on a constant column: no split, weight 0.
  Matrix flat(6, 1, 1.0);
  const std::vector<double> g{-0.5, 0.5, -0.5, 0.5, -0.5, 0.5};
  const std::vector<double> h(6, 0.25);
  GrowInput fin;
  fin.x = &flat;
  fin.grad = g;
  fin.hess = h;
  const DecisionTree none = build_tree(fin, TreeParams{}, SplitMethod::kExact);
  REQUIRE(none.nodes.size() == 1);
  CHECK(none.nodes[0].value == 0.0);

  params.max_depth = 4;
  params.min_samples_leaf = 1;
  std::vector<std::size_t> leaf_of;
  const DecisionTree t = build_tree(in, params, SplitMethod::kExact, &leaf_of);
  for (std::size_t i = 0; i < 40; ++i) CHECK(t.predict(p.x.row(i)) == t.nodes[leaf_of[i]].value);
}

TEST_CASE("boosted prediction boundary rules") {
  Rng rng(21);
  const Matrix x = random_matrix(rng, 50, 2);
  const std::vector<int> y = separable_labels(x);
  TreeParams params;
  params.n_rounds = 0;
  const BoostedModel m0 = fit_boosted(x, y, params, BoostingMode::kSecondOrder);
  CHECK(m0.trees.empty());
  const double prior = std::count(y.begin(), y.end(), 1) / 50.0;
  for (std::size_t i = 0; i < 50; i += 7) {
    CHECK(m0.predict_probability(x.row(i)) == doctest::Approx(prior).epsilon(1e-12));
  }

  BoostedModel m;
  m.feature_count = 2;
  m.learning_rate = 0.3;
  const std::vector<double> row{0.1, -0.2};
  CHECK(m.predict_probability(row) == 0.5);
  CHECK(m.predict_label(row) == 1);
  const double before = m.predict_margin(row);
  DecisionTree constant;
  constant.nodes.push_back(TreeNode{.value = 1.7});
  m.trees.push_back(constant);
  CHECK(m.predict_margin(row) - before == doctest::Approx(0.3 * 1.7));
}

TEST_CASE("binning worked examples") {
  Matrix x(6, 1);
  const double vals[] = {2.0, -1.0, 2.0, 7.5, -1.0, 7.5};
  for (std::size_t i = 0; i < 6; ++i) x(i, 0) = vals[i];
  const BinnedFeatures b = bin_features(x, 255);
  CHECK(b.n_bins(0) == 3);
  CHECK(b.bins[0] == std::vector<std::uint32_t>{1, 0, 1, 2, 0, 2});

  Rng rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix col = random_matrix(rng, 30, 1);
    const BinnedFeatures cb = bin_features(col, 2 + rng.uniform_index(20));
    for (std::size_t i = 0; i < 30; ++i) {
      for (std::size_t j = 0; j < 30; ++j) {
        if (col(i, 0) < col(j, 0)) CHECK(cb.bins[0][i] <= cb.bins[0][j]);
      }
    }
  }
}

TEST_CASE("GOSS worked examples") {
  Rng rng(23);
  std::vector<double> g(10);
  for (double& v : g) v = rng.normal();
  const GossSample all = goss_sample(g, 1.0, 0.0, 3);
  CHECK(all.indices.size() == 10);
  for (double m : all.multipliers) CHECK(m == 1.0);

  std::vector<std::size_t> order(10);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(g[a]) > std::abs(g[b]); });
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const GossSample s = goss_sample(g, 0.2, 0.3, seed);
    CHECK(std::count(s.indices.begin(), s.indices.end(), order[0]) == 1);
    CHECK(std::count(s.indices.begin(), s.indices.end(), order[1]) == 1);
  }
}

TEST_CASE("GOSS weighted gradient sum is unbiased over 10000 seeds") {
  Rng rng(24);
  std::vector<double> g(200);
  for (double& v : g) v = rng.normal() + 1.0;
  const double truth = std::accumulate(g.begin(), g.end(), 0.0);
  double mean = 0.0;
  for (int r = 0; r < 10000; ++r) {
    const GossSample s = goss_sample(g, 0.2, 0.1, static_cast<std::uint64_t>(r));
    double est = 0.0;
    for (std::size_t k = 0; k < s.indices.size(); ++k) est += s.multipliers[k] * g[s.indices[k]];
    mean += est / 10000.0;
  }
  CHECK(std::abs(mean - truth) <= 0.01 * std::abs(truth));
}

TEST_CASE("EFB worked examples: one-hot and dense columns") {
  Matrix onehot(12, 4, 0.0);
  for (std::size_t i = 0; i < 12; ++i) onehot(i, i % 4) = 1.0;
  const BinnedFeatures b1 = bin_features(onehot, 255);
  const FeatureBundles one = efb_bundle(b1, 0.0);
  CHECK(one.bundles.size() == 1);
  CHECK(one.decode_all() == b1.bins);

  Rng rng(25);
  Matrix dense(12, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 4; ++j) dense(i, j) = 1.0 + rng.uniform01();
  }
  const BinnedFeatures b2 = bin_features(dense, 255);
  const FeatureBundles each = efb_bundle(b2, 0.0);
  CHECK(each.bundles.size() == 4);
  CHECK(each.decode_all() == b2.bins);
}

TEST_CASE("bagging majority vote matches enumeration over 5-tree patterns") {
  for (unsigned pattern = 0; pattern < 32; ++pattern) {
    std::vector<int> votes(5);
    int ones = 0;
    for (std::size_t t = 0; t < 5; ++t) ones += votes[t] = (pattern >> t) & 1U;
    CHECK(majority_vote(votes) == (ones >= 3 ? 1 : 0));
  }
  // Unanimous trees decide.
  BaggedModel m;
  m.feature_count = 1;
  for (int t = 0; t < 5; ++t) {
    DecisionTree leaf;
    leaf.nodes.push_back(TreeNode{.value = 0.9});
    m.trees.push_back(leaf);
  }
  const std::vector<double> row{0.0};
  CHECK(m.predict_label(row) == 1);
  for (auto& t : m.trees) t.nodes[0].value = 0.1;
  CHECK(m.predict_label(row) == 0);
}
