#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "positivity/dataset.hpp"

namespace positivity {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

// n_pos counts violating samples (labels = 1), n_neg the rest.
// Internal nodes send x[feature] <= threshold left.
struct TreeNode {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t depth = 0;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = kNoNode;
  std::size_t right = kNoNode;

  bool is_leaf() const { return left == kNoNode; }
  std::size_t size() const { return n_pos + n_neg; }
  double purity() const { return static_cast<double>(n_pos) / static_cast<double>(size()); }

  bool operator==(const TreeNode&) const = default;
};

// Binary tree over one treatment group; nodes[0] is the root.
struct ExplanationTree {
  std::vector<TreeNode> nodes;
  int group = 0;
  std::vector<std::string> feature_names;
  std::size_t total_violations = 0;

  const TreeNode& root() const { return nodes.front(); }

  std::size_t leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return i;
  }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    collect_leaves(0, out);
    return out;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }

  bool operator==(const ExplanationTree&) const = default;

 private:
  void collect_leaves(std::size_t i, std::vector<std::size_t>& out) const {
    if (nodes[i].is_leaf()) {
      out.push_back(i);
      return;
    }
    collect_leaves(nodes[i].left, out);
    collect_leaves(nodes[i].right, out);
  }
};

inline double gini(std::size_t n_pos, std::size_t n_neg) {
  const std::size_t n = n_pos + n_neg;
  if (n == 0) throw std::invalid_argument("gini of an empty node");
  const double p = static_cast<double>(n_pos) / static_cast<double>(n);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double weighted_impurity = 0.0;
};

namespace detail {

// n * weighted Gini / 2 as the exact fraction
// (pl*nl*sr + pr*nr*sl) / (sl*sr) for children of sizes sl, sr.
struct SplitScore {
  unsigned __int128 numerator = 0;
  unsigned __int128 denominator = 1;

  bool operator<(const SplitScore& o) const { return numerator * o.denominator < o.numerator * denominator; }
};

inline SplitScore split_score(std::uint64_t pos_l, std::uint64_t neg_l, std::uint64_t pos_r, std::uint64_t neg_r) {
  using u128 = unsigned __int128;
  const u128 size_l = pos_l + neg_l;
  const u128 size_r = pos_r + neg_r;
  return {u128(pos_l) * neg_l * size_r + u128(pos_r) * neg_r * size_l, size_l * size_r};
}

inline double midpoint(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return mid < b ? mid : a;
}

}  // namespace detail

// Exhaustive CART split search minimizing child-size-weighted Gini over
// midpoints between consecutive distinct values. Ties go to the lowest
// feature index, then the lowest threshold. Empty when no split lowers the
// node's impurity.
inline std::optional<Split> best_split(const Matrix& features, std::span<const std::size_t> rows,
                                       const std::vector<bool>& labels) {
  const std::size_t n = rows.size();
  std::size_t pos = 0;
  for (std::size_t r : rows) pos += labels[r];
  const std::size_t neg = n - pos;
  if (n < 2 || pos == 0 || neg == 0) return std::nullopt;

  // Parent score pos*neg/n; a split must be strictly better.
  detail::SplitScore best{static_cast<unsigned __int128>(pos) * neg, n};
  std::optional<Split> result;
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  for (std::size_t f = 0; f < features.cols(); ++f) {
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      const double xa = features(a, f);
      const double xb = features(b, f);
      return xa < xb || (xa == xb && a < b);
    });
    std::size_t pos_l = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      pos_l += labels[sorted[i]];
      const double here = features(sorted[i], f);
      const double next = features(sorted[i + 1], f);
      if (!(here < next)) continue;
      const std::size_t size_l = i + 1;
      const auto score = detail::split_score(pos_l, size_l - pos_l, pos - pos_l, (n - size_l) - (pos - pos_l));
      if (score < best) {
        best = score;
        result = Split{f, detail::midpoint(here, next),
                       2.0 * static_cast<double>(best.numerator) /
                           (static_cast<double>(best.denominator) * static_cast<double>(n))};
      }
    }
  }
  return result;
}

struct TreeOptions {
  std::size_t max_depth = 10;
  std::size_t min_node_size = 2;
};

namespace detail {

inline std::size_t grow(ExplanationTree& tree, const Matrix& features, const std::vector<bool>& labels,
                        std::vector<std::size_t> rows, std::size_t depth, const TreeOptions& options) {
  TreeNode node;
  node.depth = depth;
  for (std::size_t r : rows) node.n_pos += labels[r];
  node.n_neg = rows.size() - node.n_pos;
  const std::size_t index = tree.nodes.size();
  tree.nodes.push_back(node);

  if (depth >= options.max_depth || rows.size() < options.min_node_size || node.n_pos == 0 || node.n_neg == 0) {
    return index;
  }
  const auto split = best_split(features, rows, labels);
  if (!split) return index;

  std::vector<std::size_t> left_rows;
  std::vector<std::size_t> right_rows;
  for (std::size_t r : rows) {
    (features(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();
  const std::size_t left = grow(tree, features, labels, std::move(left_rows), depth + 1, options);
  const std::size_t right = grow(tree, features, labels, std::move(right_rows), depth + 1, options);
  tree.nodes[index].feature = split->feature;
  tree.nodes[index].threshold = split->threshold;
  tree.nodes[index].left = left;
  tree.nodes[index].right = right;
  return index;
}

}  // namespace detail

// Greedy CART growth on one group's samples, labels = violation flags.
inline ExplanationTree build_tree(const Matrix& features, const std::vector<std::string>& feature_names,
                                  const std::vector<bool>& labels, int group, const TreeOptions& options = {}) {
  if (labels.size() != features.rows()) throw std::invalid_argument("labels and samples differ in length");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0 || positives == labels.size()) {
    throw std::invalid_argument("build_tree needs both violating and non-violating samples");
  }
  ExplanationTree tree;
  tree.group = group;
  tree.feature_names = feature_names;
  tree.total_violations = positives;
  std::vector<std::size_t> rows(features.rows());
  std::iota(rows.begin(), rows.end(), 0);
  detail::grow(tree, features, labels, std::move(rows), 0, options);
  return tree;
}

inline ExplanationTree build_tree(const Dataset& dataset, int group, const std::vector<bool>& group_labels,
                                  const TreeOptions& options = {}) {
  const auto rows = dataset.group_rows(group);
  return build_tree(dataset.subset(rows).features(), dataset.feature_names(), group_labels, group, options);
}

// Top-down asymmetric pruning: a node becomes a leaf when its violation
// purity exceeds beta or it holds fewer than gamma * |V| violating samples.
// Counts are untouched; discarded subtrees are dropped from the arena.
inline ExplanationTree prune(const ExplanationTree& tree, double beta, double gamma) {
  ExplanationTree out;
  out.group = tree.group;
  out.feature_names = tree.feature_names;
  out.total_violations = tree.total_violations;
  const double min_violations = gamma * static_cast<double>(tree.total_violations);

  auto copy = [&](auto&& self, std::size_t i) -> std::size_t {
    TreeNode node = tree.nodes[i];
    const std::size_t index = out.nodes.size();
    out.nodes.push_back(node);
    if (node.is_leaf()) return index;
    if (node.purity() > beta || static_cast<double>(node.n_pos) < min_violations) {
      out.nodes[index].left = kNoNode;
      out.nodes[index].right = kNoNode;
      return index;
    }
    const std::size_t left = self(self, node.left);
    const std::size_t right = self(self, node.right);
    out.nodes[index].left = left;
    out.nodes[index].right = right;
    return index;
  };
  copy(copy, 0);
  return out;
}

// Leaves reported as violation regions: purity >= beta and at least
// gamma * |V| violating samples.
inline std::vector<std::size_t> violation_leaves(const ExplanationTree& tree, double beta, double gamma) {
  std::vector<std::size_t> out;
  const double min_violations = gamma * static_cast<double>(tree.total_violations);
  for (std::size_t leaf : tree.leaves()) {
    const auto& node = tree.nodes[leaf];
    if (node.n_pos > 0 && node.purity() >= beta && static_cast<double>(node.n_pos) >= min_violations) {
      out.push_back(leaf);
    }
  }
  return out;
}

}  // namespace positivity
