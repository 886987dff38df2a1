#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "rjm/ensemble.hpp"
#include "rjm/error.hpp"
#include "rjm/rng.hpp"

using namespace rjm;

namespace {

std::vector<double> random_distribution(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  for (auto& x : v) x = rng.uniform();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

int first_argmax(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

EnsembleInput from(std::vector<std::vector<double>> ds) {
  EnsembleInput in;
  for (std::size_t i = 0; i < ds.size(); ++i) in.add("m" + std::to_string(i), std::move(ds[i]));
  return in;
}

std::vector<int> sort_oracle(const std::vector<double>& v) {
  std::vector<int> ids(v.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(b)]; });
  return ids;
}

}  // namespace

TEST_CASE("majority vote") {
  // argmaxes 2, 2, 5
  std::vector<std::vector<double>> ds(3, std::vector<double>(6, 0.05));
  ds[0][2] = 0.75;
  ds[1][2] = 0.75;
  ds[2][5] = 0.75;
  CHECK(bagging_vote(from(ds)) == 2);

  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto d = random_distribution(rng, 7);
    CHECK(bagging_vote(from({d})) == first_argmax(d));
  }
}

TEST_CASE("two-two splits among four voters") {
  // class 1 carries more total mass
  CHECK(bagging_vote(from({{0.6, 0.4, 0.0}, {0.5, 0.3, 0.2}, {0.1, 0.9, 0.0}, {0.2, 0.7, 0.1}})) == 1);
  // mass ties exactly (dyadic values), lowest id wins
  CHECK(bagging_vote(from({{0.25, 0.75}, {0.25, 0.75}, {0.75, 0.25}, {0.75, 0.25}})) == 0);
  // a third class with more mass but fewer votes does not win
  CHECK(bagging_vote(from({{0.5, 0.0, 0.5 - 1e-9}, {0.5, 0.0, 0.5 - 1e-9}, {0.0, 0.5, 0.5 - 1e-9}, {0.0, 0.5, 0.5 - 1e-9}})) == 0);

  // every 2-2 split over a coarse probability grid, rule evaluated by hand
  std::vector<std::vector<double>> grid;
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; a + b <= 8; ++b) grid.push_back({a / 8.0, b / 8.0, (8 - a - b) / 8.0});
  Rng rng(2);
  int splits = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<std::vector<double>> ds;
    for (int c = 0; c < 4; ++c) ds.push_back(grid[rng.below(grid.size())]);
    int votes[3] = {0, 0, 0};
    double mass[3] = {0, 0, 0};
    for (const auto& d : ds) {
      ++votes[first_argmax(d)];
      for (int k = 0; k < 3; ++k) mass[k] += d[static_cast<std::size_t>(k)];
    }
    std::vector<int> tied;
    for (int k = 0; k < 3; ++k)
      if (votes[k] == 2) tied.push_back(k);
    if (tied.size() != 2) continue;
    ++splits;
    const int expect = mass[tied[1]] > mass[tied[0]] ? tied[1] : tied[0];
    CHECK(bagging_vote(from(ds)) == expect);
  }
  CHECK(splits > 1000);
}

TEST_CASE("probability-sum vote") {
  const auto r = ibagging(from({{0.6, 0.4}, {0.1, 0.9}}));
  CHECK(r.label == 1);
  CHECK(r.combined[0] == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(r.combined[1] == doctest::Approx(0.65).epsilon(1e-15));
  // the hard vote ties here and falls back to mass, agreeing with the sum
  CHECK(bagging_vote(from({{0.6, 0.4}, {0.1, 0.9}})) == 1);

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto d = random_distribution(rng, 1 + rng.below(12) + 1);
    const std::size_t m = 1 + rng.below(6);
    const auto out = ibagging(from(std::vector(m, d)));
    CHECK(out.label == first_argmax(d));
    for (std::size_t k = 0; k < d.size(); ++k) CHECK(out.combined[k] == doctest::Approx(d[k]).epsilon(1e-12));
  }
}

TEST_CASE("probability-sum vote ignores order and duplication") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<double>> ds;
    for (int c = 0; c < 4; ++c) ds.push_back(random_distribution(rng, 9));
    const auto base = ibagging(from(ds));
    CHECK(std::accumulate(base.combined.begin(), base.combined.end(), 0.0) == doctest::Approx(1.0));

    auto shuffled = ds;
    rng.shuffle(std::span(shuffled));
    const auto perm = ibagging(from(shuffled));
    CHECK(perm.label == base.label);
    for (std::size_t k = 0; k < 9; ++k) CHECK(perm.combined[k] == doctest::Approx(base.combined[k]).epsilon(1e-14));

    auto doubled = ds;
    doubled.insert(doubled.end(), ds.begin(), ds.end());
    const auto dup = ibagging(from(doubled));
    CHECK(dup.label == base.label);
    for (std::size_t k = 0; k < 9; ++k) CHECK(dup.combined[k] == doctest::Approx(base.combined[k]).epsilon(1e-14));
  }
}

TEST_CASE("votes and sums agree on unanimous argmax") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 5;
    const int winner = static_cast<int>(rng.below(k));
    std::vector<std::vector<double>> ds;
    for (int c = 0; c < 4; ++c) {
      auto d = random_distribution(rng, k);
      std::swap(d[static_cast<std::size_t>(winner)], d[static_cast<std::size_t>(first_argmax(d))]);
      ds.push_back(d);
    }
    const auto in = from(ds);
    CHECK(bagging_vote(in) == winner);
    CHECK(ibagging(in).label == winner);
  }
}

TEST_CASE("top_n ranking") {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng.below(30);
    auto v = random_distribution(rng, k);
    if (trial % 3 == 0) v[rng.below(k)] = v[0];  // force a tie now and then
    const auto oracle = sort_oracle(v);
    const auto full = top_n(v, k);
    CHECK(full == oracle);
    auto sorted = full;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < k; ++i) CHECK(sorted[i] == static_cast<int>(i));
    for (std::size_t n = 1; n < k; ++n) {
      const auto part = top_n(v, n);
      CHECK(std::equal(part.begin(), part.end(), full.begin()));
    }
    CHECK(top_n(v, 1)[0] == ibagging(from({v})).label);
    CHECK_THROWS_AS(top_n(v, k + 1), ArgumentError);
    CHECK_THROWS_AS(top_n(v, 0), ArgumentError);
  }
  const std::vector<double> ties{0.2, 0.3, 0.2, 0.3};
  CHECK(top_n(ties, 4) == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("bagging_rank orders by votes then mass") {
  const auto in = from({{0.1, 0.2, 0.7}, {0.1, 0.5, 0.4}, {0.3, 0.1, 0.6}});
  // votes: class 2 twice, class 1 once; class 0 none
  CHECK(bagging_rank(in, 3) == std::vector<int>{2, 1, 0});
  CHECK(bagging_rank(in, 1)[0] == bagging_vote(in));
  CHECK_THROWS_AS(bagging_rank(in, 4), ArgumentError);
}

TEST_CASE("malformed ensembles") {
  CHECK_THROWS_AS(bagging_vote(EnsembleInput{}), ArgumentError);
  CHECK_THROWS_AS(ibagging(EnsembleInput{}), ArgumentError);
  CHECK_THROWS_AS(ibagging(from({{0.5, 0.5}, {0.2, 0.3, 0.5}})), ShapeError);
  CHECK_THROWS_AS(bagging_vote(from({{0.5, 0.5}, {1.0}})), ShapeError);
}
