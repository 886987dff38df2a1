#pragma once

#include <cstddef>
#include <json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "rjm/classifier.hpp"
#include "rjm/rng.hpp"

namespace rjm {

/// Internal nodes send x[feature] < threshold to the left child. Leaves carry
/// a class distribution (classification) or a single weight (regression).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;

  bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  /// Longest root-to-leaf path, in splits.
  std::size_t depth() const;
  std::size_t leaf_count() const;
  /// Adds one per split on feature f to counts[f].
  void tally_splits(std::vector<std::size_t>& counts) const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);
};

struct GiniSplit {
  int feature = -1;
  double threshold = 0.0;
  double impurity_decrease = 0.0;  // weighted, normalized by node size
};

/// Best Gini split of `rows` over `features`. Candidates are midpoints between
/// consecutive distinct values; ties keep the lowest feature then the lowest
/// threshold. Returns nullopt when no split reduces impurity or respects
/// `min_leaf`.
std::optional<GiniSplit> best_gini_split(const Matrix& x, std::span<const std::size_t> rows, std::span<const int> y,
                                         int classes, std::span<const std::size_t> features, std::size_t min_leaf);

struct GiniTreeParams {
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 1;
  /// Fraction of features drawn per node; <= 0 means sqrt(p) / p.
  double feature_fraction = 0.0;
};

/// Classification tree on `rows` (repeats allowed, e.g. a bootstrap sample).
DecisionTree fit_gini_tree(const Matrix& x, std::span<const std::size_t> rows, std::span<const int> y, int classes,
                           const GiniTreeParams& params, Rng& rng);

}  // namespace rjm
