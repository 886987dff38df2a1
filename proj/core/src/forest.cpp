#include "rjm/forest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

#include "rjm/error.hpp"
#include "rjm/parallel.hpp"

namespace rjm {

ForestModel::ForestModel(int classes, ForestParams params, std::vector<std::size_t> columns,
                         std::vector<DecisionTree> trees)
    : classes_(classes), params_(params), columns_(std::move(columns)), trees_(std::move(trees)) {}

void ForestModel::set_columns(std::vector<std::size_t> columns) { columns_ = std::move(columns); }

std::vector<double> ForestModel::predict_row(std::span<const double> row) const {
  std::vector<double> x(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) x[j] = row[columns_[j]];
  std::vector<double> p(static_cast<std::size_t>(classes_), 0.0);
  for (const auto& t : trees_) {
    const auto& leaf = t.leaf_for(x);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += leaf.value[k];
  }
  for (auto& v : p) v /= static_cast<double>(trees_.size());
  return p;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"kind", "forest"},
          {"classes", classes_},
          {"layout_version", layout_version()},
          {"params",
           {{"trees", params_.trees},
            {"max_depth", params_.max_depth},
            {"feature_fraction", params_.feature_fraction},
            {"min_samples_leaf", params_.min_samples_leaf},
            {"bootstrap", params_.bootstrap},
            {"seed", params_.seed}}},
          {"columns", columns_},
          {"trees", trees}};
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  ForestParams p;
  const auto& jp = j.at("params");
  p.trees = jp.at("trees").get<std::size_t>();
  p.max_depth = jp.at("max_depth").get<std::size_t>();
  p.feature_fraction = jp.at("feature_fraction").get<double>();
  p.min_samples_leaf = jp.at("min_samples_leaf").get<std::size_t>();
  p.bootstrap = jp.at("bootstrap").get<bool>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::from_json(t));
  ForestModel m(j.at("classes").get<int>(), p, j.at("columns").get<std::vector<std::size_t>>(), std::move(trees));
  m.set_layout_version(j.at("layout_version").get<int>());
  return m;
}

ForestModel train_random_forest(const Matrix& x, std::span<const int> y, int classes, const ForestParams& params) {
  if (x.rows == 0 || x.rows != y.size()) throw ArgumentError("random forest: need |X| = |y| > 0");
  if (params.trees < 1) throw ConfigError("random forest: trees must be >= 1");
  for (int label : y) {
    if (label < 0 || label >= classes) throw LabelError("random forest: label out of range");
  }
  if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) {
    spdlog::warn("random forest: single-class training labels; the model is a constant predictor");
  }
  GiniTreeParams tree_params{params.max_depth, params.min_samples_leaf, params.feature_fraction};
  std::vector<DecisionTree> trees(params.trees);
  parallel_for(params.trees, params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t));
    std::vector<std::size_t> rows(x.rows);
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.below(x.rows);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees[t] = fit_gini_tree(x, rows, y, classes, tree_params, rng);
  });
  std::vector<std::size_t> columns(x.cols);
  std::iota(columns.begin(), columns.end(), 0);
  return ForestModel(classes, params, std::move(columns), std::move(trees));
}

}  // namespace rjm
