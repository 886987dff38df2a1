#include "rjm/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rjm/error.hpp"
#include "rjm/parallel.hpp"

namespace rjm {

BoostedModel::BoostedModel(int classes, BoostParams params, std::vector<std::size_t> columns)
    : classes_(classes), params_(params), columns_(std::move(columns)) {}

void BoostedModel::set_columns(std::vector<std::size_t> columns) { columns_ = std::move(columns); }

namespace {

void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  for (auto& x : v) x /= s;
}

}  // namespace

std::vector<double> BoostedModel::raw_scores(std::span<const double> row) const {
  std::vector<double> x(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) x[j] = row[columns_[j]];
  std::vector<double> s(static_cast<std::size_t>(classes_), 0.0);
  for (const auto& round : rounds_) {
    for (std::size_t k = 0; k < round.size(); ++k) s[k] += params_.learning_rate * round[k].leaf_for(x).value[0];
  }
  return s;
}

std::vector<double> BoostedModel::predict_row(std::span<const double> row) const {
  auto s = raw_scores(row);
  softmax_inplace(s);
  return s;
}

nlohmann::json BoostedModel::to_json() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& round : rounds_) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : round) trees.push_back(t.to_json());
    rounds.push_back(std::move(trees));
  }
  return {{"kind", "boosted"},
          {"classes", classes_},
          {"layout_version", layout_version()},
          {"params",
           {{"rounds", params_.rounds},
            {"learning_rate", params_.learning_rate},
            {"max_depth", params_.max_depth},
            {"lambda", params_.lambda},
            {"min_child_weight", params_.min_child_weight},
            {"gamma", params_.gamma},
            {"seed", params_.seed}}},
          {"columns", columns_},
          {"training_loss", training_loss},
          {"rounds", rounds}};
}

BoostedModel BoostedModel::from_json(const nlohmann::json& j) {
  BoostParams p;
  const auto& jp = j.at("params");
  p.rounds = jp.at("rounds").get<std::size_t>();
  p.learning_rate = jp.at("learning_rate").get<double>();
  p.max_depth = jp.at("max_depth").get<std::size_t>();
  p.lambda = jp.at("lambda").get<double>();
  p.min_child_weight = jp.at("min_child_weight").get<double>();
  p.gamma = jp.at("gamma").get<double>();
  p.seed = jp.at("seed").get<std::uint64_t>();
  BoostedModel m(j.at("classes").get<int>(), p, j.at("columns").get<std::vector<std::size_t>>());
  m.set_layout_version(j.at("layout_version").get<int>());
  m.training_loss = j.at("training_loss").get<std::vector<double>>();
  for (const auto& round : j.at("rounds")) {
    std::vector<DecisionTree> trees;
    for (const auto& t : round) trees.push_back(DecisionTree::from_json(t));
    m.add_round(std::move(trees));
  }
  return m;
}

std::vector<SortedColumn> presort_columns(const Matrix& x) {
  std::vector<SortedColumn> cols(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    auto& c = cols[f];
    c.rows.resize(x.rows);
    std::iota(c.rows.begin(), c.rows.end(), 0u);
    std::stable_sort(c.rows.begin(), c.rows.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    c.values.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) c.values[i] = x(c.rows[i], f);
  }
  return cols;
}

DecisionTree fit_gradient_tree(const Matrix& x, const std::vector<SortedColumn>& sorted, std::span<const double> grad,
                               std::span<const double> hess, const BoostParams& params) {
  const std::size_t n = x.rows;
  const double lambda = params.lambda;
  auto weight = [&](double g, double h) { return -g / (h + lambda); };
  auto score = [&](double g, double h) { return g * g / (h + lambda); };

  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);
  struct Stat {
    double g = 0.0, h = 0.0;
  };
  std::vector<Stat> stats(1);
  for (std::size_t i = 0; i < n; ++i) {
    stats[0].g += grad[i];
    stats[0].h += hess[i];
  }
  std::vector<int> level{0};

  struct Best {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  struct Running {
    double g = 0.0, h = 0.0, last = 0.0;
    bool seen = false;
  };

  for (std::size_t depth = 0; !level.empty(); ++depth) {
    if (depth >= params.max_depth) {
      for (int id : level) tree.nodes[static_cast<std::size_t>(id)].value = {weight(stats[static_cast<std::size_t>(id)].g, stats[static_cast<std::size_t>(id)].h)};
      break;
    }
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < level.size(); ++s) slot_of[static_cast<std::size_t>(level[s])] = static_cast<int>(s);
    std::vector<Best> best(level.size());
    std::vector<Running> run(level.size());

    for (std::size_t f = 0; f < sorted.size(); ++f) {
      std::fill(run.begin(), run.end(), Running{});
      const auto& col = sorted[f];
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t r = col.rows[i];
        const int node = node_of[r];
        if (node < 0) continue;
        const int slot = slot_of[static_cast<std::size_t>(node)];
        if (slot < 0) continue;
        Running& rs = run[static_cast<std::size_t>(slot)];
        const double v = col.values[i];
        if (rs.seen && v != rs.last) {
          const Stat& total = stats[static_cast<std::size_t>(node)];
          const double gr = total.g - rs.g;
          const double hr = total.h - rs.h;
          if (rs.h >= params.min_child_weight && hr >= params.min_child_weight) {
            const double gain = 0.5 * (score(rs.g, rs.h) + score(gr, hr) - score(total.g, total.h)) - params.gamma;
            Best& b = best[static_cast<std::size_t>(slot)];
            if (gain > 1e-12 && gain > b.gain + 1e-12) {
              const double mid = rs.last + (v - rs.last) / 2.0;
              b = {gain, static_cast<int>(f), mid > rs.last ? mid : v};
            }
          }
        }
        rs.g += grad[r];
        rs.h += hess[r];
        rs.last = v;
        rs.seen = true;
      }
    }

    std::vector<int> next;
    std::vector<int> left_child(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < level.size(); ++s) {
      const auto id = static_cast<std::size_t>(level[s]);
      if (best[s].feature < 0) {
        tree.nodes[id].value = {weight(stats[id].g, stats[id].h)};
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.resize(tree.nodes.size());
      tree.nodes[id].feature = best[s].feature;
      tree.nodes[id].threshold = best[s].threshold;
      tree.nodes[id].left = left;
      tree.nodes[id].right = left + 1;
      left_child[id] = left;
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const auto id = static_cast<std::size_t>(node);
      if (id >= left_child.size() || left_child[id] < 0) {
        node_of[r] = -1;  // settled in a leaf
        continue;
      }
      const auto& parent = tree.nodes[id];
      const int child = x(r, static_cast<std::size_t>(parent.feature)) < parent.threshold ? parent.left : parent.right;
      node_of[r] = child;
      stats[static_cast<std::size_t>(child)].g += grad[r];
      stats[static_cast<std::size_t>(child)].h += hess[r];
    }
    level = std::move(next);
  }
  return tree;
}

BoostedModel train_gbt(const Matrix& x, std::span<const int> y, int classes, const BoostParams& params) {
  if (x.rows == 0 || x.rows != y.size()) throw ArgumentError("boosting: need |X| = |y| > 0");
  if (classes < 2) throw ConfigError("boosting: need at least two classes");
  for (int label : y) {
    if (label < 0 || label >= classes) throw LabelError("boosting: label out of range");
  }
  const std::size_t n = x.rows;
  const auto K = static_cast<std::size_t>(classes);
  std::vector<std::size_t> columns(x.cols);
  std::iota(columns.begin(), columns.end(), 0);
  BoostedModel model(classes, params, std::move(columns));

  const auto sorted = presort_columns(x);
  std::vector<double> scores(n * K, 0.0);
  std::vector<double> prob(n * K);
  auto refresh = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> p(prob.data() + i * K, K);
      std::copy_n(scores.begin() + static_cast<std::ptrdiff_t>(i * K), K, p.begin());
      softmax_inplace(p);
      loss -= std::log(std::max(p[static_cast<std::size_t>(y[i])], 1e-300));
    }
    return loss / static_cast<double>(n);
  };
  model.training_loss.push_back(refresh());

  std::vector<std::vector<double>> grad(K, std::vector<double>(n)), hess(K, std::vector<double>(n));
  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        const double p = prob[i * K + k];
        grad[k][i] = p - (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0);
        hess[k][i] = std::max(p * (1.0 - p), 1e-16);
        if (!std::isfinite(grad[k][i]) || !std::isfinite(hess[k][i])) {
          throw TrainingError("boosting: non-finite gradient at round " + std::to_string(round) + ", row " +
                              std::to_string(i) + ", class " + std::to_string(k));
        }
      }
    }
    std::vector<DecisionTree> trees(K);
    parallel_for(K, params.threads, [&](std::size_t k) { trees[k] = fit_gradient_tree(x, sorted, grad[k], hess[k], params); });
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      for (std::size_t k = 0; k < K; ++k) scores[i * K + k] += params.learning_rate * trees[k].leaf_for(row).value[0];
    }
    model.add_round(std::move(trees));
    model.training_loss.push_back(refresh());
  }
  return model;
}

namespace {

template <typename Walk>
FeatureUsage usage_from(const std::vector<std::size_t>& columns, Walk&& walk) {
  std::vector<std::size_t> local(columns.size(), 0);
  walk(local);
  FeatureUsage usage;
  const std::size_t width = columns.empty() ? 0 : *std::max_element(columns.begin(), columns.end()) + 1;
  usage.tallies.assign(width, 0);
  for (std::size_t j = 0; j < local.size() && j < columns.size(); ++j) {
    usage.tallies[columns[j]] += local[j];
    if (local[j] > 0) ++usage.used;
  }
  return usage;
}

}  // namespace

FeatureUsage feature_usage(const ForestModel& model) {
  return usage_from(model.columns(), [&](std::vector<std::size_t>& counts) {
    for (const auto& t : model.trees()) t.tally_splits(counts);
  });
}

FeatureUsage feature_usage(const BoostedModel& model) {
  return usage_from(model.columns(), [&](std::vector<std::size_t>& counts) {
    for (const auto& round : model.rounds())
      for (const auto& t : round) t.tally_splits(counts);
  });
}

}  // namespace rjm
