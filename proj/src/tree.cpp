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
#include <string>

#include "pdadsv/error.hpp"
#include "pdadsv/gbdt.hpp"

namespace pdadsv {
namespace {

// Gains equal up to rounding are ties, so the ordering rule (lower feature,
// then lower threshold) does not depend on summation order.
constexpr double kGainTieTolerance = 1e-12;

bool improves(double gain, double best) {
  return gain > best + kGainTieTolerance * std::max(1.0, std::abs(best));
}

// Candidate (gain, feature) beats the incumbent.
bool beats(double gain, std::size_t feature, double best_gain, std::size_t best_feature) {
  if (improves(gain, best_gain)) return true;
  return !improves(best_gain, gain) && feature < best_feature;
}

struct ScanResult {
  double threshold;
  double gain;
};

// Scans m entries already in ascending value order. `at(i)` yields
// {value, grad, hess} for the i-th smallest entry.
template <typename At>
std::optional<ScanResult> scan_sorted(std::size_t m, At&& at, const TreeParams& params) {
  if (m < 2) return std::nullopt;
  double grad_total = 0.0, hess_total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto [v, g, h] = at(i);
    grad_total += g;
    hess_total += h;
  }
  std::optional<ScanResult> best;
  double grad_left = 0.0, hess_left = 0.0;
  auto [value, g0, h0] = at(0);
  grad_left += g0;
  hess_left += h0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const auto [next_value, g, h] = at(i + 1);
    const std::size_t n_left = i + 1;
    if (next_value != value && n_left >= params.min_samples_leaf &&
        m - n_left >= params.min_samples_leaf) {
      const double gain = split_gain(grad_left, hess_left, grad_total - grad_left,
                                     hess_total - hess_left, params.lambda, params.gamma);
      if (gain > 0.0 && (!best || improves(gain, best->gain))) {
        best = ScanResult{std::midpoint(value, next_value), gain};
      }
    }
    grad_left += g;
    hess_left += h;
    value = next_value;
  }
  return best;
}

double leaf_weight(double grad_sum, double hess_sum, double lambda) {
  const double denom = hess_sum + lambda;
  return denom > 0.0 ? -grad_sum / denom : 0.0;
}

// Shared bookkeeping for both growth methods. Positions index the (possibly
// subsampled) row list; gradients are pre-multiplied by the row weight.
class Grower {
 public:
  Grower(const GrowInput& in, const TreeParams& params, SplitMethod method)
      : in_(in), params_(params), method_(method) {
    const std::size_t n_rows = in.x ? in.x->rows() : in.binned->n_rows;
    if (in.rows.empty()) {
      rows_.resize(n_rows);
      std::iota(rows_.begin(), rows_.end(), std::size_t{0});
    } else {
      rows_.assign(in.rows.begin(), in.rows.end());
    }
    const std::size_t n_feat = in.x ? in.x->cols() : in.binned->n_features();
    if (in.features.empty()) {
      features_.resize(n_feat);
      std::iota(features_.begin(), features_.end(), std::size_t{0});
    } else {
      features_.assign(in.features.begin(), in.features.end());
    }
    const std::size_t m = rows_.size();
    grad_.resize(m);
    hess_.resize(m);
    for (std::size_t p = 0; p < m; ++p) {
      const double w = in.multipliers.empty() ? 1.0 : in.multipliers[p];
      grad_[p] = in.grad[rows_[p]] * w;
      hess_[p] = in.hess[rows_[p]] * w;
    }
    order_.resize(m);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    leaf_of_.assign(m, 0);
    if (method_ == SplitMethod::kExact) presort();
  }

  DecisionTree grow() {
    tree_.nodes.emplace_back();
    grow_node(0, 0, rows_.size(), 0);
    return std::move(tree_);
  }

  const std::vector<std::size_t>& leaf_of() const { return leaf_of_; }

 private:
  struct Choice {
    std::size_t feature;
    double threshold;
    double gain;
    std::uint32_t bin;  // histogram only
  };

  void presort() {
    sorted_.resize(features_.size());
    for (std::size_t s = 0; s < features_.size(); ++s) {
      const std::size_t f = features_[s];
      auto& idx = sorted_[s];
      idx = order_;
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return (*in_.x)(rows_[a], f) < (*in_.x)(rows_[b], f);
      });
    }
  }

  void grow_node(std::size_t node, std::size_t begin, std::size_t end, int depth) {
    double grad_sum = 0.0, hess_sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      grad_sum += grad_[order_[i]];
      hess_sum += hess_[order_[i]];
    }
    const std::size_t count = end - begin;
    std::optional<Choice> choice;
    if (depth < params_.max_depth && count >= 2 * std::max<std::size_t>(params_.min_samples_leaf, 1)) {
      choice = method_ == SplitMethod::kExact ? best_exact(begin, end)
                                              : best_histogram(begin, end, grad_sum, hess_sum);
    }
    if (!choice) {
      tree_.nodes[node].value = leaf_weight(grad_sum, hess_sum, params_.lambda);
      for (std::size_t i = begin; i < end; ++i) leaf_of_[order_[i]] = node;
      return;
    }

    // goes_left per position, then stable partition of every ordering.
    goes_left_.resize(rows_.size());
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t p = order_[i];
      goes_left_[p] = routes_left(p, *choice);
    }
    auto pred = [&](std::size_t p) { return goes_left_[p] != 0; };
    const auto mid_it = std::stable_partition(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                                              order_.begin() + static_cast<std::ptrdiff_t>(end), pred);
    const auto mid = static_cast<std::size_t>(mid_it - order_.begin());
    for (auto& idx : sorted_) {
      std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                            idx.begin() + static_cast<std::ptrdiff_t>(end), pred);
    }

    const auto left = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto right = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    TreeNode& n = tree_.nodes[node];
    n.feature = static_cast<int>(choice->feature);
    n.threshold = choice->threshold;
    n.left = left;
    n.right = right;
    grow_node(static_cast<std::size_t>(left), begin, mid, depth + 1);
    grow_node(static_cast<std::size_t>(right), mid, end, depth + 1);
  }

  bool routes_left(std::size_t p, const Choice& c) const {
    if (method_ == SplitMethod::kExact) return (*in_.x)(rows_[p], c.feature) < c.threshold;
    return bin_of(c.feature, rows_[p]) <= c.bin;
  }

  std::uint32_t bin_of(std::size_t feature, std::size_t row) const {
    return in_.bundles ? in_.bundles->decode(feature, row) : in_.binned->bins[feature][row];
  }

  std::optional<Choice> best_exact(std::size_t begin, std::size_t end) const {
    std::optional<Choice> best;
    for (std::size_t s = 0; s < features_.size(); ++s) {
      const std::size_t f = features_[s];
      const auto& idx = sorted_[s];
      auto at = [&](std::size_t i) {
        const std::size_t p = idx[begin + i];
        return std::tuple{(*in_.x)(rows_[p], f), grad_[p], hess_[p]};
      };
      const auto r = scan_sorted(end - begin, at, params_);
      if (r && (!best || beats(r->gain, f, best->gain, best->feature))) {
        best = Choice{f, r->threshold, r->gain, 0};
      }
    }
    return best;
  }

  std::optional<Choice> best_histogram(std::size_t begin, std::size_t end, double grad_sum,
                                       double hess_sum) {
    const BinnedFeatures& binned = *in_.binned;
    const std::size_t count = end - begin;

    // Accumulate one histogram per storage column (bundle or raw feature).
    auto accumulate = [&](const std::vector<std::uint32_t>& column, std::size_t n_bins) {
      hist_g_.assign(n_bins, 0.0);
      hist_h_.assign(n_bins, 0.0);
      hist_c_.assign(n_bins, 0);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t p = order_[i];
        const std::uint32_t v = column[rows_[p]];
        hist_g_[v] += grad_[p];
        hist_h_[v] += hess_[p];
        ++hist_c_[v];
      }
    };

    std::vector<char> wanted(binned.n_features(), 0);
    for (std::size_t f : features_) wanted[f] = 1;

    std::optional<Choice> best;
    auto consider = [&](std::size_t f, std::uint32_t offset) {
      const std::size_t n_bins = binned.n_bins(f);
      if (n_bins < 2) return;
      // Bin 0 is derived from the node totals so bundled and unbundled
      // storage produce bit-identical sums.
      double g_rest = 0.0, h_rest = 0.0;
      std::size_t c_rest = 0;
      for (std::size_t b = 1; b < n_bins; ++b) {
        g_rest += hist_g_[offset + b];
        h_rest += hist_h_[offset + b];
        c_rest += hist_c_[offset + b];
      }
      double grad_left = grad_sum - g_rest;
      double hess_left = hess_sum - h_rest;
      std::size_t n_left = count - c_rest;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        if (b > 0) {
          grad_left += hist_g_[offset + b];
          hess_left += hist_h_[offset + b];
          n_left += hist_c_[offset + b];
        }
        if (n_left < params_.min_samples_leaf || count - n_left < params_.min_samples_leaf) continue;
        const double gain = split_gain(grad_left, hess_left, grad_sum - grad_left,
                                       hess_sum - hess_left, params_.lambda, params_.gamma);
        if (gain > 0.0 && (!best || beats(gain, f, best->gain, best->feature))) {
          best = Choice{f, binned.cuts[f][b], gain, static_cast<std::uint32_t>(b)};
        }
      }
    };

    if (in_.bundles) {
      const FeatureBundles& fb = *in_.bundles;
      for (std::size_t k = 0; k < fb.bundles.size(); ++k) {
        bool any = false;
        for (const auto& m : fb.bundles[k]) any |= wanted[m.feature] != 0;
        if (!any) continue;
        accumulate(fb.columns[k], fb.total_bins[k]);
        for (const auto& m : fb.bundles[k]) {
          if (wanted[m.feature]) consider(m.feature, m.offset);
        }
      }
    } else {
      for (std::size_t f : features_) {
        accumulate(binned.bins[f], binned.n_bins(f));
        consider(f, 0);
      }
    }
    return best;
  }

  const GrowInput& in_;
  const TreeParams& params_;
  SplitMethod method_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> features_;
  std::vector<double> grad_, hess_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> sorted_;
  std::vector<char> goes_left_;
  std::vector<std::size_t> leaf_of_;
  std::vector<double> hist_g_, hist_h_;
  std::vector<std::size_t> hist_c_;
  DecisionTree tree_;
};

}  // namespace

void TreeParams::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (max_depth < 0) fail("max_depth must be >= 0");
  if (min_samples_leaf < 1) fail("min_samples_leaf must be >= 1");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must lie in (0, 1]");
  if (n_rounds < 0) fail("n_rounds must be >= 0");
  if (!(colsample > 0.0 && colsample <= 1.0)) fail("colsample must lie in (0, 1]");
  if (max_bins < 2) fail("max_bins must be >= 2");
  if (!(efb_max_conflict >= 0.0 && efb_max_conflict <= 1.0)) fail("efb_max_conflict must lie in [0, 1]");
  if (!(goss_a >= 0.0 && goss_a <= 1.0 && goss_b >= 0.0 && goss_b <= 1.0 && goss_a + goss_b <= 1.0)) {
    throw Error(ErrorCode::kInvalidFractions, "GOSS fractions need a, b in [0, 1] and a + b <= 1");
  }
}

double DecisionTree::predict(std::span<const double> x) const {
  return nodes[leaf_index(x)].value;
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                                       : n.right);
  }
  return i;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda, double gamma) {
  auto term = [lambda](double g, double h) {
    const double denom = h + lambda;
    return denom > 0.0 ? g * g / denom : 0.0;
  };
  return 0.5 * (term(grad_left, hess_left) + term(grad_right, hess_right) -
                term(grad_left + grad_right, hess_left + hess_right)) -
         gamma;
}

std::optional<SplitCandidate> best_split_exact(std::span<const double> values,
                                               std::span<const double> grad,
                                               std::span<const double> hess,
                                               const TreeParams& params) {
  if (values.size() != grad.size() || values.size() != hess.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "values, gradients and hessians differ in length");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  auto at = [&](std::size_t i) { return std::tuple{values[idx[i]], grad[idx[i]], hess[idx[i]]}; };
  const auto r = scan_sorted(idx.size(), at, params);
  if (!r) return std::nullopt;
  return SplitCandidate{0, r->threshold, r->gain};
}

std::optional<SplitCandidate> find_best_split_exact(const Matrix& x, std::span<const double> grad,
                                                    std::span<const double> hess,
                                                    const TreeParams& params) {
  std::optional<SplitCandidate> best;
  std::vector<double> column(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) column[i] = x(i, f);
    auto c = best_split_exact(column, grad, hess, params);
    if (c && (!best || improves(c->gain, best->gain))) {
      c->feature = f;
      best = c;
    }
  }
  return best;
}

std::optional<SplitCandidate> find_best_split_histogram(const BinnedFeatures& binned,
                                                        std::span<const double> grad,
                                                        std::span<const double> hess,
                                                        const TreeParams& params) {
  // A depth-1 histogram tree exposes exactly the root split.
  TreeParams p = params;
  p.max_depth = 1;
  GrowInput in;
  in.binned = &binned;
  in.grad = grad;
  in.hess = hess;
  const DecisionTree t = build_tree(in, p, SplitMethod::kHistogram);
  if (t.nodes.front().is_leaf()) return std::nullopt;
  const TreeNode& root = t.nodes.front();
  // Recompute the gain from the partition for reporting.
  double gl = 0, hl = 0, gr = 0, hr = 0;
  const auto f = static_cast<std::size_t>(root.feature);
  const std::uint32_t cut_bin = binned.bin_of(f, root.threshold) - 1;
  for (std::size_t i = 0; i < binned.n_rows; ++i) {
    if (binned.bins[f][i] <= cut_bin) {
      gl += grad[i];
      hl += hess[i];
    } else {
      gr += grad[i];
      hr += hess[i];
    }
  }
  return SplitCandidate{f, root.threshold, split_gain(gl, hl, gr, hr, p.lambda, p.gamma)};
}

DecisionTree build_tree(const GrowInput& input, const TreeParams& params, SplitMethod method,
                        std::vector<std::size_t>* row_leaf) {
  if (method == SplitMethod::kExact && input.x == nullptr) {
    throw Error(ErrorCode::kDimensionMismatch, "exact growth needs the raw feature matrix");
  }
  if (method == SplitMethod::kHistogram && input.binned == nullptr) {
    throw Error(ErrorCode::kDimensionMismatch, "histogram growth needs binned features");
  }
  const std::size_t n_rows = input.x ? input.x->rows() : input.binned->n_rows;
  if (input.grad.size() != n_rows || input.hess.size() != n_rows) {
    throw Error(ErrorCode::kDimensionMismatch,
                "gradient length " + std::to_string(input.grad.size()) + " does not match " +
                    std::to_string(n_rows) + " rows");
  }
  if (!input.multipliers.empty() && input.multipliers.size() != input.rows.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "multipliers must align with rows");
  }
  Grower grower(input, params, method);
  DecisionTree tree = grower.grow();
  if (row_leaf) *row_leaf = grower.leaf_of();
  return tree;
}

}  // namespace pdadsv
