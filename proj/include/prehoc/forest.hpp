#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "prehoc/error.hpp"
#include "prehoc/predictors.hpp"
#include "prehoc/taxonomy.hpp"

namespace prehoc {

using LabelCounts = std::array<std::uint32_t, kNumLabels>;

/// Internal nodes route x[feature] <= threshold to `left`. Leaves have
/// feature == -1 and carry the bootstrap label counts that reached them.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  LabelCounts counts{};

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;
  std::size_t max_features = 0;  // 0: floor(sqrt(dims))
  std::size_t min_samples_split = 2;
};

struct Forest {
  std::vector<DecisionTree> trees;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double gini(const LabelCounts& c, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (auto v : c) {
    const double p = static_cast<double>(v) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double child_impurity = 0.0;  // size-weighted sum of child Gini
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const LabeledPoint> rows, const ForestParams& params, std::size_t dims, std::mt19937_64& rng)
      : rows_(rows), params_(params), dims_(dims), rng_(rng) {
    mtry_ = params.max_features ? params.max_features
                                : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(dims))));
    mtry_ = std::min(mtry_, dims_);
  }

  DecisionTree build(std::vector<std::size_t> sample) {
    DecisionTree tree;
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> idx;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack;
    stack.push_back({0, std::move(sample)});
    while (!stack.empty()) {
      auto [node_id, idx] = std::move(stack.back());
      stack.pop_back();

      LabelCounts counts{};
      for (auto i : idx) ++counts[index_of(rows_[i].label)];
      tree.nodes[node_id].counts = counts;

      const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
      if (pure || idx.size() < params_.min_samples_split) continue;

      const auto split = best_split(idx, counts);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left, right;
      for (auto i : idx) {
        (rows_[i].features[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
      }
      const auto l = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& n = tree.nodes[node_id];
      n.feature = split.feature;
      n.threshold = split.threshold;
      n.left = static_cast<int>(l);
      n.right = static_cast<int>(l + 1);
      stack.push_back({l + 1, std::move(right)});
      stack.push_back({l, std::move(left)});
    }
    return tree;
  }

 private:
  // Features are visited in a random order; constant features are skipped
  // without counting towards mtry, so a split is found whenever any feature
  // varies within the node.
  SplitCandidate best_split(const std::vector<std::size_t>& idx, const LabelCounts& total) {
    std::vector<std::size_t> order(dims_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitCandidate best;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    std::vector<std::pair<double, ModelLabel>> column(idx.size());

    for (std::size_t k = 0; k < dims_ && evaluated < mtry_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, dims_ - 1);
      std::swap(order[k], order[pick(rng_)]);
      const auto f = order[k];

      for (std::size_t j = 0; j < idx.size(); ++j) column[j] = {rows_[idx[j]].features[f], rows_[idx[j]].label};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;
      ++evaluated;

      LabelCounts left{};
      const std::size_t n = column.size();
      for (std::size_t j = 0; j + 1 < n; ++j) {
        ++left[index_of(column[j].second)];
        if (column[j].first == column[j + 1].first) continue;
        LabelCounts right{};
        for (std::size_t c = 0; c < kNumLabels; ++c) right[c] = total[c] - left[c];
        const std::size_t nl = j + 1, nr = n - nl;
        const double score = static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr);
        if (score < best_score) {
          best_score = score;
          best.feature = static_cast<int>(f);
          double mid = 0.5 * (column[j].first + column[j + 1].first);
          if (!(mid < column[j + 1].first)) mid = column[j].first;
          best.threshold = mid;
          best.child_impurity = score;
        }
      }
    }
    return best;
  }

  std::span<const LabeledPoint> rows_;
  const ForestParams& params_;
  std::size_t dims_;
  std::mt19937_64& rng_;
  std::size_t mtry_ = 1;
};

}  // namespace detail

/// Bagged Gini trees. Rows are put in canonical dataset_id order before
/// sampling, and tree t draws from a generator seeded with seed + t, so the
/// forest depends only on the set of rows and the seed.
inline Forest fit_random_forest(std::span<const LabeledPoint> train, const ForestParams& params = {}) {
  if (train.size() < 2) throw Error(ErrorCode::TooFewSamples, "random forest needs at least 2 rows");
  const std::size_t dims = train.front().features.size();
  if (dims == 0) throw Error(ErrorCode::DimensionMismatch, "rows have no features");
  for (const auto& p : train) {
    if (p.features.size() != dims) throw Error(ErrorCode::DimensionMismatch, "ragged training rows");
  }
  const auto first = train.front().label;
  if (std::all_of(train.begin(), train.end(), [&](const auto& p) { return p.label == first; })) {
    throw Error(ErrorCode::SingleClass, "all training rows share one label");
  }

  std::vector<LabeledPoint> rows(train.begin(), train.end());
  std::sort(rows.begin(), rows.end(), [](const LabeledPoint& a, const LabeledPoint& b) {
    return std::tie(a.dataset_id, a.label, a.features) < std::tie(b.dataset_id, b.label, b.features);
  });

  Forest forest;
  forest.n_features = dims;
  forest.seed = params.seed;
  forest.trees.reserve(params.n_trees);
  const std::size_t n = rows.size();
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    std::mt19937_64 rng(params.seed + t);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = draw(rng);
    detail::TreeBuilder builder(rows, params, dims, rng);
    forest.trees.push_back(builder.build(std::move(sample)));
  }
  return forest;
}

/// Sums leaf label counts over all trees and returns the argmax, ties going
/// to enumeration order.
inline LabelCounts forest_votes(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features) {
    throw Error(ErrorCode::DimensionMismatch,
                "forest expects " + std::to_string(forest.n_features) + " dims, got " + std::to_string(x.size()));
  }
  LabelCounts total{};
  for (const auto& tree : forest.trees) {
    const auto& leaf = tree.leaf_for(x);
    for (std::size_t c = 0; c < kNumLabels; ++c) total[c] += leaf.counts[c];
  }
  return total;
}

inline Prediction predict_forest(const Forest& forest, std::span<const double> x, std::string query_id = {}) {
  const auto votes = forest_votes(forest, x);
  const auto best = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  return Prediction(std::move(query_id), kAllLabels[best], "rfc");
}

}  // namespace prehoc
