#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rjm/classifier.hpp"
#include "rjm/tree.hpp"

namespace rjm {

struct ForestParams {
  std::size_t trees = 100;
  std::size_t max_depth = 12;
  double feature_fraction = 0.0;  // per node; <= 0 selects sqrt(p) / p
  std::size_t min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

class ForestModel final : public Classifier {
 public:
  ForestModel(int classes, ForestParams params, std::vector<std::size_t> columns, std::vector<DecisionTree> trees);

  ModelKind kind() const noexcept override { return ModelKind::forest; }
  int class_count() const noexcept override { return classes_; }
  /// Mean of the per-tree leaf distributions.
  std::vector<double> predict_row(std::span<const double> row) const override;
  nlohmann::json to_json() const override;
  static ForestModel from_json(const nlohmann::json& j);

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  const ForestParams& params() const noexcept { return params_; }
  /// Rebinds tree feature ids to full-row slots; identity by default.
  void set_columns(std::vector<std::size_t> columns);

 private:
  int classes_;
  ForestParams params_;
  std::vector<std::size_t> columns_;
  std::vector<DecisionTree> trees_;
};

/// Bootstrap per tree, Gini splits over a random feature subset per node.
/// Tree t draws from derive_seed(seed, t), so results do not depend on
/// `threads`.
ForestModel train_random_forest(const Matrix& x, std::span<const int> y, int classes, const ForestParams& params);

struct FeatureUsage {
  std::size_t used = 0;               // features with at least one split
  std::vector<std::size_t> tallies;   // split count per full-row slot
};

}  // namespace rjm
