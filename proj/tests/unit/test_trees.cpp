#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rjm/error.hpp"
#include "rjm/forest.hpp"
#include "rjm/gbt.hpp"
#include "rjm/grid_search.hpp"
#include "rjm/tree.hpp"

using namespace rjm;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  return m;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

using oracle::enumerate_splits;
using oracle::walk_count;

double train_accuracy(const Classifier& m, const Matrix& x, std::span<const int> y) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < x.rows; ++i) hit += argmax(m.predict_row(x.row(i))) == static_cast<std::size_t>(y[i]);
  return static_cast<double>(hit) / static_cast<double>(x.rows);
}

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs blobs(std::uint64_t seed, std::size_t n, int classes, std::size_t cols, double noise) {
  Rng rng(seed);
  Blobs b{Matrix(n, cols), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    b.y.push_back(c);
    for (std::size_t j = 0; j < cols; ++j) {
      const double centre = j < 3 ? static_cast<double>((c + static_cast<int>(j)) % classes) : 0.0;
      b.x(i, j) = centre + noise * rng.normal();
    }
  }
  return b;
}

}  // namespace

TEST_CASE("gini split selection matches exhaustive enumeration") {
  Rng rng(77);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    const std::size_t cols = 1 + rng.below(3);
    const int classes = 2 + static_cast<int>(rng.below(2));
    Matrix x(n, cols);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
      for (std::size_t j = 0; j < cols; ++j) x(i, j) = static_cast<double>(rng.below(5));
    }
    const auto rows = all_rows(n);
    const auto feats = all_rows(cols);
    const auto got = best_gini_split(x, rows, y, classes, feats, 1);
    const auto want = enumerate_splits(x, rows, y, classes);
    REQUIRE(got.has_value() == want.has_value());
    if (!got) continue;
    CHECK(got->feature == want->feature);
    CHECK(got->threshold == doctest::Approx(want->threshold));
  }
}

TEST_CASE("small trees") {
  Rng rng(1);
  SUBCASE("two separated points, depth 1") {
    const Matrix x = from_rows({{0.0}, {1.0}});
    const std::vector<int> y{0, 1};
    const auto t = fit_gini_tree(x, all_rows(2), y, 2, {.max_depth = 1, .feature_fraction = 1.0}, rng);
    CHECK(t.depth() == 1);
    CHECK(t.leaf_for(x.row(0)).value == std::vector<double>{1.0, 0.0});
    CHECK(t.leaf_for(x.row(1)).value == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("xor-style four points, depth 2") {
    const Matrix x = from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const std::vector<int> y{0, 1, 1, 2};
    const auto t = fit_gini_tree(x, all_rows(4), y, 3, {.max_depth = 2, .feature_fraction = 1.0}, rng);
    const auto root = enumerate_splits(x, all_rows(4), y, 3);
    REQUIRE(root);
    CHECK(t.nodes[0].feature == root->feature);
    CHECK(t.nodes[0].threshold == doctest::Approx(root->threshold));
    for (int side : {t.nodes[0].left, t.nodes[0].right}) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < 4; ++i) {
        const bool left = x(i, static_cast<std::size_t>(root->feature)) < root->threshold;
        if (left == (side == t.nodes[0].left)) rows.push_back(i);
      }
      const auto child = enumerate_splits(x, rows, y, 3);
      REQUIRE(child);
      CHECK(t.nodes[static_cast<std::size_t>(side)].feature == child->feature);
    }
    for (std::size_t i = 0; i < 4; ++i) CHECK(argmax(t.leaf_for(x.row(i)).value) == static_cast<std::size_t>(y[i]));
  }
  SUBCASE("pure xor offers no impurity-reducing split") {
    const Matrix x = from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const std::vector<int> y{0, 1, 1, 0};
    CHECK_FALSE(best_gini_split(x, all_rows(4), y, 2, all_rows(2), 1).has_value());
  }
  SUBCASE("depth limit and leaf distributions") {
    const auto b = blobs(3, 200, 4, 6, 1.0);
    for (std::size_t depth : {0u, 1u, 3u, 6u}) {
      const auto t = fit_gini_tree(b.x, all_rows(200), b.y, 4, {.max_depth = depth}, rng);
      CHECK(t.depth() <= depth);
      for (const auto& node : t.nodes) {
        if (!node.is_leaf()) continue;
        CHECK(std::accumulate(node.value.begin(), node.value.end(), 0.0) == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("forest predictions") {
  const auto b = blobs(5, 150, 3, 5, 0.8);
  const auto forest = train_random_forest(b.x, b.y, 3, {.trees = 15, .max_depth = 5, .seed = 2});
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<double> mean(3, 0.0);
    for (const auto& t : forest.trees()) {
      const auto& leaf = t.leaf_for(b.x.row(i));
      for (int k = 0; k < 3; ++k) mean[k] += leaf.value[k] / 15.0;
    }
    const auto p = forest.predict_row(b.x.row(i));
    for (int k = 0; k < 3; ++k) CHECK(p[k] == doctest::Approx(mean[k]).epsilon(1e-12));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  }

  const ForestModel copies(3, {}, all_rows(5), std::vector<DecisionTree>(4, forest.trees()[0]));
  for (std::size_t i = 0; i < 20; ++i) {
    const auto single = forest.trees()[0].leaf_for(b.x.row(i)).value;
    const auto p = copies.predict_row(b.x.row(i));
    for (int k = 0; k < 3; ++k) CHECK(p[k] == doctest::Approx(single[k]));
  }

  const auto again = train_random_forest(b.x, b.y, 3, {.trees = 15, .max_depth = 5, .seed = 2, .threads = 3});
  CHECK(again.to_json() == forest.to_json());
}

TEST_CASE("more trees fit the training set at least as well, for most seeds") {
  const auto b = blobs(8, 240, 4, 8, 1.2);
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto one = train_random_forest(b.x, b.y, 4, {.trees = 1, .max_depth = 8, .seed = seed});
    const auto fifty = train_random_forest(b.x, b.y, 4, {.trees = 50, .max_depth = 8, .seed = seed});
    wins += train_accuracy(fifty, b.x, b.y) >= train_accuracy(one, b.x, b.y);
  }
  CHECK(wins >= 3);
}

TEST_CASE("feature usage") {
  SUBCASE("depth-0 model") {
    DecisionTree stump;
    stump.nodes.push_back({-1, 0, -1, -1, {1.0}});
    const ForestModel m(1, {}, all_rows(10), {stump});
    CHECK(feature_usage(m).used == 0);
  }
  SUBCASE("single split on feature 7") {
    DecisionTree t;
    t.nodes.push_back({7, 0.5, 1, 2, {}});
    t.nodes.push_back({-1, 0, -1, -1, {1.0, 0.0}});
    t.nodes.push_back({-1, 0, -1, -1, {0.0, 1.0}});
    const ForestModel m(2, {}, all_rows(10), {t});
    const auto u = feature_usage(m);
    CHECK(u.used == 1);
    CHECK(u.tallies[7] == 1);
    CHECK(std::accumulate(u.tallies.begin(), u.tallies.end(), std::size_t{0}) == 1);
  }
  SUBCASE("tallies match an independent traversal") {
    const auto b = blobs(9, 200, 3, 12, 1.0);
    auto forest = train_random_forest(b.x, b.y, 3, {.trees = 10, .max_depth = 6, .seed = 4});
    std::vector<std::size_t> cols(12);
    for (std::size_t j = 0; j < 12; ++j) cols[j] = 100 + 2 * j;  // bound into a wider row
    forest.set_columns(cols);
    std::map<std::size_t, std::size_t> tally;
    for (const auto& t : forest.trees()) walk_count(t, 0, tally);
    const auto u = feature_usage(forest);
    CHECK(u.used == tally.size());
    for (const auto& [f, c] : tally) CHECK(u.tallies.at(cols[f]) == c);
    CHECK(u.used < 12 + 1);

    const auto boosted = train_gbt(b.x, b.y, 3, {.rounds = 4, .max_depth = 3});
    std::map<std::size_t, std::size_t> btally;
    for (const auto& round : boosted.rounds())
      for (const auto& t : round) walk_count(t, 0, btally);
    const auto bu = feature_usage(boosted);
    CHECK(bu.used == btally.size());
    for (const auto& [f, c] : btally) CHECK(bu.tallies.at(f) == c);
  }
}

TEST_CASE("boosting leaf weights are -G/(H+lambda)") {
  const Matrix x = from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
  for (const auto& y : {std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 0, 0, 1}}) {
    const double lambda = 0.7;
    const auto m = train_gbt(x, y, 2, {.rounds = 1, .learning_rate = 1.0, .max_depth = 0, .lambda = lambda});
    REQUIRE(m.rounds().size() == 1);
    for (int k = 0; k < 2; ++k) {
      double g = 0, h = 0;
      for (int label : y) {
        g += 0.5 - (label == k ? 1.0 : 0.0);
        h += 0.25;
      }
      const auto& tree = m.rounds()[0][static_cast<std::size_t>(k)];
      REQUIRE(tree.nodes.size() == 1);
      CHECK(std::fabs(tree.nodes[0].value[0] - (-g / (h + lambda))) <= 1e-9);
    }
  }
}

TEST_CASE("boosting with zero learning rate stays uniform") {
  const auto b = blobs(2, 80, 4, 4, 1.0);
  const auto m = train_gbt(b.x, b.y, 4, {.rounds = 3, .learning_rate = 0.0});
  for (std::size_t i = 0; i < b.x.rows; ++i)
    for (double p : m.predict_row(b.x.row(i))) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("boosting training loss never rises") {
  const auto b = blobs(4, 200, 3, 5, 0.5);
  const auto m = train_gbt(b.x, b.y, 3, {.rounds = 10, .learning_rate = 0.3, .max_depth = 3});
  REQUIRE(m.training_loss.size() == 11);
  for (std::size_t r = 1; r < m.training_loss.size(); ++r) CHECK(m.training_loss[r] <= m.training_loss[r - 1]);
  CHECK(m.training_loss.back() < m.training_loss.front());
  for (std::size_t i = 0; i < 30; ++i) {
    const auto p = m.predict_row(b.x.row(i));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(train_gbt(b.x, b.y, 1, {}), ConfigError);
}

TEST_CASE("model artifacts and layout checks") {
  const auto b = blobs(6, 100, 3, 4, 1.0);
  const auto forest = train_random_forest(b.x, b.y, 3, {.trees = 5, .max_depth = 4});
  const auto boosted = train_gbt(b.x, b.y, 3, {.rounds = 3, .max_depth = 2});
  const std::vector<std::string> ids{"a", "b", "c"};
  for (const Classifier* m : {static_cast<const Classifier*>(&forest), static_cast<const Classifier*>(&boosted)}) {
    const auto loaded = read_model_artifact(write_model_artifact(*m, "eeeeeeeeeeeeeeee", ids));
    CHECK(loaded.fit_ids == ids);
    CHECK(loaded.model->kind() == m->kind());
    for (std::size_t i = 0; i < 10; ++i) CHECK(loaded.model->predict_row(b.x.row(i)) == m->predict_row(b.x.row(i)));
  }
  FeatureVector fv;
  fv.values.assign(b.x.row(0).begin(), b.x.row(0).end());
  CHECK(forest.predict_proba(fv) == forest.predict_row(b.x.row(0)));
  fv.layout_version = kFeatureLayoutVersion + 1;
  CHECK_THROWS_AS(forest.predict_proba(fv), ConfigError);
}

TEST_CASE("grid search") {
  struct P {
    int a = 0;
    int b = 0;
  };
  auto metric = [](const P& p) { return -std::pow(p.a - 2, 2) - std::pow(p.b - 1, 2); };
  SUBCASE("one cell wins by default") {
    const std::vector<P> grid{{5, 5}};
    const auto r = grid_search<P>(grid, metric);
    CHECK(r.best == 0);
    CHECK(r.surface.size() == 1);
  }
  SUBCASE("2x2 best equals the recomputed maximum") {
    std::vector<P> grid;
    for (int a : {1, 2})
      for (int b : {0, 3}) grid.push_back({a, b});
    const auto r = grid_search<P>(grid, metric);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (metric(grid[i]) > metric(grid[arg])) arg = i;
    CHECK(r.best == arg);
    CHECK(*r.surface[r.best].metric == metric(grid[arg]));
    const std::function<std::vector<std::pair<std::string, std::string>>(const P&)> describe = [](const P& p) {
      return std::vector<std::pair<std::string, std::string>>{{"a", std::to_string(p.a)}, {"b", std::to_string(p.b)}};
    };
    const auto tsv = surface_tsv(r, describe);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 1 + 4);
  }
  SUBCASE("ties keep grid order, failures are missing cells") {
    const std::vector<P> grid{{0, 0}, {2, 1}, {2, 1}, {9, 9}};
    auto flaky = [&](const P& p) -> double {
      if (p.a == 0) throw TrainingError("boom");
      return metric(p);
    };
    const auto r = grid_search<P>(grid, flaky);
    CHECK(r.best == 1);
    CHECK_FALSE(r.surface[0].metric.has_value());
    CHECK(r.surface[0].failure == "boom");
    auto always = [](const P&) -> double { throw TrainingError("no"); };
    CHECK_THROWS_AS(grid_search<P>(grid, always), TrainingError);
  }
}
