#include "rjm/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rjm/error.hpp"

namespace rjm {

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.at(0);
  while (!node->is_leaf()) {
    node = &nodes[x[static_cast<std::size_t>(node->feature)] < node->threshold ? node->left : node->right];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
      deepest = std::max(deepest, d);
    } else {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

void DecisionTree::tally_splits(std::vector<std::size_t>& counts) const {
  for (const auto& n : nodes) {
    if (n.is_leaf()) continue;
    const auto f = static_cast<std::size_t>(n.feature);
    if (f >= counts.size()) counts.resize(f + 1, 0);
    ++counts[f];
  }
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 left = nlohmann::json::array(), right = nlohmann::json::array(), value = nlohmann::json::array();
  for (const auto& n : nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  const auto& feature = j.at("feature");
  t.nodes.resize(feature.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = feature[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<std::vector<double>>();
  }
  return t;
}

namespace {

double gini_sum(const std::vector<double>& counts, double n) {
  if (n <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return n - sq / n;  // n * gini
}

double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

}  // namespace

std::optional<GiniSplit> best_gini_split(const Matrix& x, std::span<const std::size_t> rows, std::span<const int> y,
                                         int classes, std::span<const std::size_t> features, std::size_t min_leaf) {
  const std::size_t n = rows.size();
  if (n < 2 * std::max<std::size_t>(1, min_leaf)) return std::nullopt;
  const auto K = static_cast<std::size_t>(classes);
  std::vector<double> total(K, 0.0);
  for (auto r : rows) total[static_cast<std::size_t>(y[r])] += 1.0;
  const double dn = static_cast<double>(n);
  const double parent = gini_sum(total, dn);

  std::optional<GiniSplit> best;
  std::vector<std::pair<double, int>> sorted(n);
  std::vector<double> left(K), right(K);
  for (const auto f : features) {
    for (std::size_t i = 0; i < n; ++i) sorted[i] = {x(rows[i], f), y[rows[i]]};
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (sorted.front().first == sorted.back().first) continue;
    std::fill(left.begin(), left.end(), 0.0);
    right = total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(sorted[i].second);
      left[c] += 1.0;
      right[c] -= 1.0;
      if (sorted[i].first == sorted[i + 1].first) continue;
      const std::size_t nl = i + 1;
      if (nl < min_leaf || n - nl < min_leaf) continue;
      const double child = gini_sum(left, static_cast<double>(nl)) + gini_sum(right, static_cast<double>(n - nl));
      const double decrease = (parent - child) / dn;
      if (decrease > 1e-12 && (!best || decrease > best->impurity_decrease + 1e-15)) {
        best = GiniSplit{static_cast<int>(f), split_point(sorted[i].first, sorted[i + 1].first), decrease};
      }
    }
  }
  return best;
}

DecisionTree fit_gini_tree(const Matrix& x, std::span<const std::size_t> rows, std::span<const int> y, int classes,
                           const GiniTreeParams& params, Rng& rng) {
  if (rows.empty()) throw TrainingError("tree: no training rows");
  const auto K = static_cast<std::size_t>(classes);
  std::size_t per_node = x.cols;
  if (params.feature_fraction <= 0.0) {
    per_node = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(x.cols)))));
  } else if (params.feature_fraction < 1.0) {
    per_node = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(params.feature_fraction * static_cast<double>(x.cols))));
  }
  std::vector<std::size_t> all_features(x.cols);
  std::iota(all_features.begin(), all_features.end(), 0);

  DecisionTree tree;
  struct Pending {
    int node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});
  std::vector<std::size_t> candidates;
  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    std::vector<double> counts(K, 0.0);
    for (auto r : job.rows) counts[static_cast<std::size_t>(y[r])] += 1.0;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;

    std::optional<GiniSplit> split;
    if (!pure && job.depth < params.max_depth) {
      if (per_node >= x.cols) {
        candidates = all_features;
      } else {
        // Partial Fisher-Yates draw, then sort so ties resolve by feature id.
        candidates = all_features;
        for (std::size_t i = 0; i < per_node; ++i) {
          std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
        }
        candidates.resize(per_node);
        std::sort(candidates.begin(), candidates.end());
      }
      split = best_gini_split(x, job.rows, y, classes, candidates, params.min_samples_leaf);
    }
    if (!split) {
      const double n = static_cast<double>(job.rows.size());
      for (auto& c : counts) c /= n;
      tree.nodes[static_cast<std::size_t>(job.node)].value = std::move(counts);
      continue;
    }
    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : job.rows) (x(r, static_cast<std::size_t>(split->feature)) < split->threshold ? left_rows : right_rows).push_back(r);
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, std::move(right_rows), job.depth + 1});
    stack.push_back({left, std::move(left_rows), job.depth + 1});
  }
  return tree;
}

}  // namespace rjm
