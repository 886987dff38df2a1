#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rjm/clustering.hpp"
#include "rjm/error.hpp"

using namespace rjm;

namespace {

using oracle::Points;
using oracle::optimal_inertia;
using oracle::sq;

Points random_points(Rng& rng, std::size_t n, std::size_t d) {
  Points p(n, std::vector<double>(d));
  for (auto& v : p)
    for (auto& x : v) x = rng.uniform(-5.0, 5.0);
  return p;
}

std::size_t linear_scan(const KMeansModel& m, std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.k(); ++c)
    if (sq(v, m.centroid(c)) < sq(v, m.centroid(best))) best = c;
  return best;
}

}  // namespace

TEST_CASE("k-means analytic cases") {
  Rng rng(1);
  const Points pts = random_points(rng, 20, 3);
  SUBCASE("k = 1 gives the mean") {
    const auto m = kmeans_fit(pts, {.k = 1});
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0;
      for (const auto& p : pts) mean += p[j];
      CHECK(m.centroid(0)[j] == doctest::Approx(mean / 20.0).epsilon(1e-12));
    }
  }
  SUBCASE("k = n gives zero inertia") {
    const auto m = kmeans_fit(pts, {.k = 20});
    CHECK(kmeans_inertia(m, pts) == doctest::Approx(0.0));
    for (const auto& p : pts) CHECK(sq(p, m.centroid(kmeans_assign(m, p))) == doctest::Approx(0.0));
  }
  SUBCASE("k larger than the distinct point count") {
    Points dup{{1, 1}, {1, 1}, {2, 2}};
    CHECK_THROWS_AS(kmeans_fit(dup, {.k = 3}), ConfigError);
  }
}

TEST_CASE("k-means matches the optimal partition on tiny inputs") {
  Rng rng(2024);
  SUBCASE("six planar points, k = 2") {
    const Points six{{0, 0}, {0.5, 0.2}, {0.1, 0.8}, {4, 4}, {4.2, 3.1}, {3.7, 4.4}};
    const auto m = kmeans_fit(six, {.k = 2});
    CHECK(std::fabs(m.inertia - optimal_inertia(six, 2)) <= 1e-9);
    CHECK(kmeans_assign(m, six[0]) == kmeans_assign(m, six[1]));
    CHECK(kmeans_assign(m, six[0]) != kmeans_assign(m, six[3]));
  }
  SUBCASE("random sets of up to eight points") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 3 + rng.below(6);
      const std::size_t k = 1 + rng.below(3);
      const Points pts = random_points(rng, n, 2);
      const auto m = kmeans_fit(pts, {.k = k, .seed = static_cast<std::uint64_t>(trial)});
      CHECK(std::fabs(kmeans_inertia(m, pts) - optimal_inertia(pts, k)) <= 1e-9);
    }
  }
}

TEST_CASE("k-means inertia never rises") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Points pts = random_points(rng, 200, 4);
    const auto m = kmeans_fit(pts, {.k = 7, .seed = static_cast<std::uint64_t>(trial), .restarts = 1});
    REQUIRE_FALSE(m.inertia_history.empty());
    for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
      CHECK(m.inertia_history[i] <= m.inertia_history[i - 1] + 1e-9);
    }
    CHECK(m.k() == 7);
    const auto again = kmeans_fit(pts, {.k = 7, .seed = static_cast<std::uint64_t>(trial), .restarts = 1});
    CHECK(again.centroids() == m.centroids());
  }
}

TEST_CASE("nearest-centroid assignment") {
  // centroids on a line: 0 at -10, 1 at -1, 2 at 20, 3 at 5, 4 at 1
  const KMeansModel m(1, {-10, -1, 20, 5, 1});
  CHECK(kmeans_assign(m, std::vector<double>{5}) == 3);
  CHECK(kmeans_assign(m, std::vector<double>{0}) == 1);  // equidistant to 1 and 4
  CHECK_THROWS_AS(kmeans_assign(m, std::vector<double>{0, 0}), ShapeError);

  Rng rng(3);
  const Points cents = random_points(rng, 9, 3);
  std::vector<double> flat;
  for (const auto& c : cents) flat.insert(flat.end(), c.begin(), c.end());
  const KMeansModel rnd(3, flat);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span(perm));
  std::vector<double> permuted;
  for (std::size_t p : perm) permuted.insert(permuted.end(), cents[p].begin(), cents[p].end());
  const KMeansModel relabeled(3, permuted);
  for (int i = 0; i < 300; ++i) {
    const auto v = random_points(rng, 1, 3)[0];
    const std::size_t a = kmeans_assign(rnd, v);
    CHECK(a == linear_scan(rnd, v));
    CHECK(perm[kmeans_assign(relabeled, v)] == a);
  }
}

TEST_CASE("k-means artifact round-trips") {
  Rng rng(6);
  const auto m = kmeans_fit(random_points(rng, 30, 2), {.k = 4});
  std::string hash;
  const auto back = read_kmeans_artifact(write_kmeans_artifact(m, "aaaaaaaaaaaaaaaa"), &hash);
  CHECK(back.centroids() == m.centroids());
  CHECK(hash == "aaaaaaaaaaaaaaaa");
}

namespace {

std::vector<std::vector<std::string>> two_theme_corpus(Rng& rng) {
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 60; ++d) {
    const char* prefix = d % 2 ? "b" : "a";
    std::vector<std::string> doc;
    for (int t = 0; t < 20; ++t) doc.push_back(prefix + std::to_string(rng.below(6)));
    docs.push_back(doc);
  }
  return docs;
}

}  // namespace

TEST_CASE("LDA separates two disjoint vocabularies") {
  Rng rng(10);
  const auto docs = two_theme_corpus(rng);
  const auto m = lda_fit(docs, {.topics = 2, .iterations = 200, .seed = 4});
  auto theme_mass = [&](char prefix, std::size_t topic) {
    double in = 0, all = 0;
    for (std::size_t w = 0; w < m.vocab_size(); ++w) {
      if (m.vocab()[w][0] != prefix) continue;
      in += static_cast<double>(m.topic_word_count(topic, w));
      for (std::size_t k = 0; k < 2; ++k) all += static_cast<double>(m.topic_word_count(k, w));
    }
    return in / all;
  };
  const std::size_t ta = theme_mass('a', 0) >= theme_mass('a', 1) ? 0 : 1;
  CHECK(theme_mass('a', ta) >= 0.9);
  CHECK(theme_mass('b', 1 - ta) >= 0.9);
}

TEST_CASE("LDA without sweeps keeps the seeded initialization") {
  const std::vector<std::vector<std::string>> docs{{"x", "y", "x"}, {"z"}, {"y", "z", "w", "x"}};
  const auto m = lda_fit(docs, {.topics = 3, .iterations = 0, .seed = 77});
  REQUIRE(m.vocab() == std::vector<std::string>{"w", "x", "y", "z"});
  Rng rng(77);
  std::vector<std::int64_t> counts(3 * 4, 0);
  for (const auto& d : docs)
    for (const auto& t : d) {
      const auto k = rng.below(3);
      const auto w = static_cast<std::size_t>(std::find(m.vocab().begin(), m.vocab().end(), t) - m.vocab().begin());
      ++counts[k * 4 + w];
    }
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t w = 0; w < 4; ++w) CHECK(m.topic_word_count(k, w) == counts[k * 4 + w]);
}

TEST_CASE("single-token document posterior") {
  const std::vector<std::vector<std::string>> docs{{"only"}};
  const double alpha = 0.3;
  const auto m = lda_fit(docs, {.topics = 2, .alpha = alpha, .iterations = 25, .seed = 1});
  const auto theta = m.training_doc_distribution(0);
  const std::size_t k = m.assignments[0][0];
  CHECK(theta[k] == doctest::Approx((1 + alpha) / (1 + 2 * alpha)).epsilon(1e-12));
  CHECK(theta[1 - k] == doctest::Approx(alpha / (1 + 2 * alpha)).epsilon(1e-12));
}

TEST_CASE("dominant topic") {
  // planted model: topic t owns words t*3 .. t*3+2
  std::vector<std::string> vocab;
  for (int w = 0; w < 12; ++w) vocab.push_back("w" + std::to_string(w));
  std::vector<std::int64_t> tw(4 * 12, 0);
  for (int t = 0; t < 4; ++t)
    for (int j = 0; j < 3; ++j) tw[t * 12 + t * 3 + j] = 50;
  const LdaModel planted({.topics = 4, .alpha = 0.1, .beta = 0.01, .seed = 3}, vocab, tw);
  for (int t = 0; t < 4; ++t) {
    const std::vector<std::string> doc{vocab[t * 3], vocab[t * 3 + 1], vocab[t * 3 + 2], vocab[t * 3]};
    bool unknown = true;
    CHECK(lda_dominant_topic(planted, doc, &unknown) == static_cast<std::size_t>(t));
    CHECK_FALSE(unknown);
  }
  bool unknown = false;
  const std::vector<std::string> stray{"zz", "yy"};
  CHECK(lda_dominant_topic(planted, stray, &unknown) == planted.unknown_topic());
  CHECK(unknown);
  CHECK(planted.unknown_topic() == 4);

  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> doc;
    for (int j = 0; j < 6; ++j) doc.push_back(vocab[rng.below(12)]);
    const auto theta = planted.infer(doc);
    double total = 0;
    for (double p : theta) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(std::fabs(total - 1.0) <= 1e-9);
    const auto argmax = static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
    CHECK(lda_dominant_topic(planted, doc) == argmax);
  }
  for (std::size_t t = 0; t < 4; ++t) {
    const auto phi = planted.topic_word_distribution(t);
    CHECK(std::fabs(std::accumulate(phi.begin(), phi.end(), 0.0) - 1.0) <= 1e-9);
  }
}

TEST_CASE("LDA determinism, validation and artifacts") {
  Rng rng(12);
  const auto docs = two_theme_corpus(rng);
  const LdaParams p{.topics = 3, .iterations = 30, .seed = 9};
  const auto a = lda_fit(docs, p);
  const auto b = lda_fit(docs, p);
  CHECK(a.assignments == b.assignments);
  for (std::size_t d = 0; d < docs.size(); d += 5) {
    CHECK(a.infer(docs[d]) == b.infer(docs[d]));
    const auto theta = a.training_doc_distribution(d);
    CHECK(std::fabs(std::accumulate(theta.begin(), theta.end(), 0.0) - 1.0) <= 1e-9);
  }
  CHECK(a.alpha() == doctest::Approx(50.0 / 3.0));

  const std::vector<std::vector<std::string>> empty_docs{{}, {}};
  CHECK_THROWS_AS(lda_fit(empty_docs, p), TrainingError);
  CHECK_THROWS_AS(lda_fit(docs, {.topics = 1}), ConfigError);

  const std::vector<std::string> ids{"r1", "r2"};
  std::string hash;
  std::vector<std::string> fit_ids;
  const auto back = read_lda_artifact(write_lda_artifact(a, "bbbbbbbbbbbbbbbb", ids), &hash, &fit_ids);
  CHECK(fit_ids == ids);
  CHECK(hash == "bbbbbbbbbbbbbbbb");
  CHECK(back.vocab() == a.vocab());
  CHECK(back.infer(docs[0]) == a.infer(docs[0]));
}
