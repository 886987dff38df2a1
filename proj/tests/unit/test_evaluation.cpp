#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "rjm/ensemble.hpp"
#include "rjm/error.hpp"
#include "rjm/evaluation.hpp"
#include "rjm/rng.hpp"

using namespace rjm;

namespace {

ClassMaps maps(std::vector<std::string> vocab) {
  ClassMaps c;
  c.position_vocab = std::move(vocab);
  c.size_bands = {1, 2, 3, 4};
  return c;
}

TargetLabels with_position(int p) {
  TargetLabels l;
  l.position = p;
  return l;
}

std::vector<double> random_scores(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  for (auto& x : v) x = static_cast<double>(rng.below(6));  // coarse, so ties happen
  return v;
}

}  // namespace

TEST_CASE("precision against a direct count") {
  CHECK(precision(std::vector{1, 2, 3}, std::vector{1, 2, 3}) == 1.0);
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<int> p(n), t(n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.below(4));
      t[i] = static_cast<int>(rng.below(4));
      hits += p[i] == t[i];
    }
    CHECK(precision(p, t) == static_cast<double>(hits) / static_cast<double>(n));
  }
  CHECK_THROWS_AS(precision(std::vector{1}, std::vector{1, 2}), ArgumentError);
  CHECK_THROWS_AS(precision(std::vector<int>{}, std::vector<int>{}), ArgumentError);
}

TEST_CASE("recall@n against a membership count") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t items = 1 + rng.below(30), k = 6;
    std::vector<std::vector<int>> ranked;
    std::vector<int> truth;
    for (std::size_t i = 0; i < items; ++i) {
      ranked.push_back(top_n(random_scores(rng, k), k));
      truth.push_back(static_cast<int>(rng.below(k)));
    }
    double prev = 0.0;
    for (std::size_t n = 1; n <= k; ++n) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < items; ++i)
        for (std::size_t j = 0; j < n; ++j) hits += ranked[i][j] == truth[i];
      const double r = recall_at_n(ranked, truth, n);
      CHECK(r == static_cast<double>(hits) / static_cast<double>(items));
      CHECK(r >= prev);
      prev = r;
    }
    CHECK(prev == 1.0);
  }
  const std::vector<std::vector<int>> short_lists{{0, 1}, {1}};
  CHECK_THROWS_AS(recall_at_n(short_lists, std::vector{0, 1}, 2), ArgumentError);
  CHECK_THROWS_AS(recall_at_n(short_lists, std::vector{0}, 1), ArgumentError);
  CHECK_THROWS_AS(recall_at_n(short_lists, std::vector{0, 1}, 0), ArgumentError);
}

TEST_CASE("recall@1 is argmax precision") {
  Rng rng(3);
  for (int set = 0; set < 1000; ++set) {
    const std::size_t items = 1 + rng.below(25), k = 2 + rng.below(10);
    std::vector<std::vector<int>> ranked;
    std::vector<int> argmax, truth;
    for (std::size_t i = 0; i < items; ++i) {
      const auto s = random_scores(rng, k);
      ranked.push_back(top_n(s, std::min<std::size_t>(k, 4)));
      argmax.push_back(static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()));
      truth.push_back(static_cast<int>(rng.below(k)));
    }
    CHECK(recall_at_n(ranked, truth, 1) == precision(argmax, truth));
  }
}

TEST_CASE("most-frequent-label baseline") {
  SUBCASE("a, a, b") {
    const auto c = maps({"b", "a"});
    const std::vector<TargetLabels> labels{with_position(1), with_position(1), with_position(0)};
    const auto m = fit_baseline(labels, c);
    CHECK(baseline_top_n(m, Task::position, 1) == std::vector<int>{1});
    CHECK(baseline_top_n(m, Task::position, 2) == std::vector<int>{1, 0});
    CHECK_THROWS_AS(baseline_top_n(m, Task::position, 3), ArgumentError);
  }
  SUBCASE("count ties go to the smaller name") {
    const auto c = maps({"z", "m", "q"});
    const std::vector<TargetLabels> labels{with_position(0), with_position(1)};
    const auto m = fit_baseline(labels, c);
    // q never occurs and is ranked last
    CHECK(baseline_top_n(m, Task::position, 3) == std::vector<int>{1, 0, 2});
  }
  SUBCASE("prefix of a frequency sort and modal-frequency precision") {
    Rng rng(4);
    std::vector<std::string> vocab;
    for (int i = 0; i < 12; ++i) vocab.push_back("p" + std::to_string(100 - i * 7 % 13));
    const auto c = maps(vocab);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<TargetLabels> train(1 + rng.below(80));
      std::map<int, std::size_t> count;
      for (auto& l : train) {
        l.position = static_cast<int>(rng.below(12));
        l.degree = static_cast<int>(rng.below(3));
        ++count[l.position];
      }
      const auto m = fit_baseline(train, c);
      std::vector<int> oracle;
      for (const auto& [id, n] : count) oracle.push_back(id);
      std::sort(oracle.begin(), oracle.end(), [&](int a, int b) {
        if (count[a] != count[b]) return count[a] > count[b];
        return vocab[static_cast<std::size_t>(a)] < vocab[static_cast<std::size_t>(b)];
      });
      const auto got = baseline_top_n(m, Task::position, oracle.size());
      CHECK(got == oracle);

      // precision of always predicting the mode equals its test frequency
      std::vector<int> test(1 + rng.below(60));
      std::size_t modal = 0;
      for (auto& t : test) {
        t = static_cast<int>(rng.below(12));
        modal += t == oracle[0];
      }
      const std::vector<int> predicted(test.size(), baseline_top_n(m, Task::position, 1)[0]);
      CHECK(std::fabs(precision(predicted, test) - static_cast<double>(modal) / static_cast<double>(test.size())) <= 1e-12);
    }
  }
  SUBCASE("errors") {
    const auto c = maps({"a"});
    CHECK_THROWS_AS(fit_baseline(std::vector<TargetLabels>{}, c), ArgumentError);
    CHECK_THROWS_AS(fit_baseline(std::vector{with_position(3)}, c), LabelError);
  }
}

TEST_CASE("score_method clamps N to the class count") {
  Rng rng(5);
  const std::array<std::size_t, 4> widths{3, 7, 4, 10};
  std::array<std::vector<std::vector<int>>, 4> ranked;
  std::array<std::vector<int>, 4> truth;
  for (std::size_t t = 0; t < 4; ++t) {
    for (int i = 0; i < 50; ++i) {
      ranked[t].push_back(top_n(random_scores(rng, widths[t]), widths[t]));
      truth[t].push_back(static_cast<int>(rng.below(widths[t])));
    }
  }
  const std::vector<std::size_t> ns{2, 3, 4};
  const auto s = score_method("m", ranked, truth, ns);
  CHECK(s.recall.size() == 3);
  CHECK(s.recall[1][0] == 1.0);  // degree, N = 3
  CHECK(s.recall[2][0] == 1.0);  // degree, N = 4 clamped to 3
  CHECK(s.recall[2][2] == 1.0);  // size has four bands
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(s.recall[0][t] <= s.recall[1][t]);
    CHECK(s.recall[1][t] <= s.recall[2][t]);
    CHECK(s.recall[0][t] == recall_at_n(ranked[t], truth[t], 2));
    std::vector<int> top1;
    for (const auto& r : ranked[t]) top1.push_back(r[0]);
    CHECK(s.precision[t] == precision(top1, truth[t]));
  }
}

TEST_CASE("report rendering") {
  EvaluationReport rep;
  rep.metadata = {{"seed", "1"}};
  for (const char* name : {"alpha", "beta"}) {
    MethodScores s;
    s.method = name;
    s.precision = {0.5, 0.25, 0.125, 1.0};
    s.recall.assign(rep.recall_n.size(), {1.0, 0.5, 0.5, 0.75});
    rep.rows.push_back(s);
  }
  rep.footnotes = reference_footnotes();
  CHECK(rep.row("beta").method == "beta");
  CHECK_THROWS_AS(rep.row("gamma"), LookupError);

  const auto tsv = rep.to_tsv();
  std::istringstream in(tsv);
  std::string line;
  std::size_t data = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    CHECK(std::count(line.begin(), line.end(), '\t') == 5);
    ++data;
  }
  CHECK(data == 1 + 2 + 3 * 2);
  CHECK(tsv.find("precision\talpha\t0.5000\t0.2500\t0.1250\t1.0000") != std::string::npos);

  const auto text = rep.to_text();
  CHECK(text.find("N = 4") != std::string::npos);
  CHECK(text.find(".710") != std::string::npos);
}
