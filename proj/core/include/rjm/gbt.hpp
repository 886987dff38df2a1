#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rjm/classifier.hpp"
#include "rjm/forest.hpp"
#include "rjm/tree.hpp"

namespace rjm {

struct BoostParams {
  std::size_t rounds = 40;
  double learning_rate = 0.2;
  std::size_t max_depth = 4;
  double lambda = 1.0;            // L2 penalty on leaf weights
  double min_child_weight = 1.0;  // minimum hessian sum per child
  double gamma = 0.0;             // minimum gain to split
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Softmax boosting: each round adds one regression tree per class; leaf
/// weights are -G / (H + lambda) from softmax cross-entropy gradients.
class BoostedModel final : public Classifier {
 public:
  BoostedModel(int classes, BoostParams params, std::vector<std::size_t> columns);

  ModelKind kind() const noexcept override { return ModelKind::boosted; }
  int class_count() const noexcept override { return classes_; }
  std::vector<double> predict_row(std::span<const double> row) const override;
  nlohmann::json to_json() const override;
  static BoostedModel from_json(const nlohmann::json& j);

  /// Raw (pre-softmax) class scores.
  std::vector<double> raw_scores(std::span<const double> row) const;

  const BoostParams& params() const noexcept { return params_; }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  void set_columns(std::vector<std::size_t> columns);
  /// rounds()[r][k] is the tree for class k in round r.
  const std::vector<std::vector<DecisionTree>>& rounds() const noexcept { return rounds_; }
  void add_round(std::vector<DecisionTree> trees) { rounds_.push_back(std::move(trees)); }

  /// Mean training log-loss before any round, then after each round.
  std::vector<double> training_loss;

 private:
  int classes_;
  BoostParams params_;
  std::vector<std::size_t> columns_;
  std::vector<std::vector<DecisionTree>> rounds_;
};

BoostedModel train_gbt(const Matrix& x, std::span<const int> y, int classes, const BoostParams& params);

/// All rows of one feature ordered by value.
struct SortedColumn {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
};
std::vector<SortedColumn> presort_columns(const Matrix& x);

/// One exact-greedy regression tree, grown level by level over all rows.
/// Splits maximize 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma; leaves
/// hold the single weight -G / (H + lambda).
DecisionTree fit_gradient_tree(const Matrix& x, const std::vector<SortedColumn>& sorted, std::span<const double> grad,
                               std::span<const double> hess, const BoostParams& params);

FeatureUsage feature_usage(const ForestModel& model);
FeatureUsage feature_usage(const BoostedModel& model);

}  // namespace rjm
