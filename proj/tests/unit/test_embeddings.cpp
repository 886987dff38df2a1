#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "rjm/embeddings.hpp"
#include "rjm/error.hpp"

using namespace rjm;

namespace {

std::vector<PhraseSequence> repeat(std::vector<std::vector<std::string>> shapes, int times) {
  std::vector<PhraseSequence> out;
  for (int i = 0; i < times; ++i)
    for (const auto& s : shapes) out.push_back({s});
  return out;
}

std::vector<double> random_vec(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("phrase sequence layout") {
  const Resume shown = parse_resume(fixtures::kShownResume, {YearMonth{2016, 6}});
  const auto seq = build_phrase_sequence(shown);
  CHECK(seq.tokens.size() == 3 * 7 + 3);
  for (const char* tok : {"硬件测试", "计算机/互联网", "软件测试", "salary_4", "size_3"}) {
    CHECK(std::count(seq.tokens.begin(), seq.tokens.end(), tok) >= 1);
  }
  // the current job fills the last experience block
  CHECK(seq.tokens[14] == "硬件测试");
  CHECK(seq.tokens[16] == "软件测试");
  CHECK(seq.tokens[21] == "age_31");
  CHECK(seq.tokens[22] == "通信工程");
  CHECK(seq.tokens[23] == "男");
  CHECK(build_phrase_sequence(shown, false).tokens.size() == 2 * 7 + 3);

  Resume bare = fixtures::person("b", {fixtures::job("会计", 1, 2, {2015, 1}, {2015, 7})});
  bare.experiences[0].department = std::string(kEmptyPhrase);
  const auto short_seq = build_phrase_sequence(bare);
  CHECK(short_seq.tokens.size() == 10);
  CHECK(std::count(short_seq.tokens.begin(), short_seq.tokens.end(), std::string(kEmptyPhrase)) == 2);
  CHECK(short_seq.tokens[6] == "quarter_2");
}

TEST_CASE("zero epochs leaves the seeded initialization") {
  SkipGramParams p;
  p.epochs = 0;
  p.min_count = 1;
  p.seed = 42;
  p.dimension = 4;
  const auto seqs = repeat({{"b", "a", "b", "c"}}, 3);
  const auto table = train_skipgram(seqs, p);
  // frequency order, ties by byte order: b (6), a (3), c (3)
  REQUIRE(table.tokens() == std::vector<std::string>{"b", "a", "c"});
  Rng rng(42);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (double x : table.vector(i)) CHECK(x == (rng.uniform() - 0.5) / 4.0);
  }
}

TEST_CASE("co-occurring tokens end up closer than tokens that never meet") {
  SkipGramParams p;
  p.min_count = 1;
  p.epochs = 30;
  p.window = 1;
  p.negatives = 2;
  p.seed = 3;
  const auto seqs = repeat({{"a", "b"}, {"b", "a"}, {"c", "c"}}, 100);
  const auto t = train_skipgram(seqs, p);
  auto vec = [&](const char* s) { return t.vector(*t.index_of(s)); };
  const double ab = cosine(vec("a"), vec("b"));
  CHECK(ab > cosine(vec("a"), vec("c")));
  CHECK(ab > cosine(vec("b"), vec("c")));
}

TEST_CASE("training properties on resume sequences") {
  std::vector<PhraseSequence> seqs;
  for (const auto& r : fixtures::synthetic(150, 17)) seqs.push_back(build_phrase_sequence(r));
  SkipGramParams p;
  p.epochs = 3;
  const auto a = train_skipgram(seqs, p);
  const auto b = train_skipgram(seqs, p);
  CHECK(a == b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.vector(i).size() == 10);
    for (double x : a.vector(i)) CHECK(std::isfinite(x));
  }
  // every token seen at least min_count times is kept
  std::map<std::string, std::size_t> freq;
  for (const auto& s : seqs)
    for (const auto& t : s.tokens) ++freq[t];
  for (const auto& [tok, c] : freq) CHECK(a.index_of(tok).has_value() == (c >= p.min_count));

  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto x = a.vector(rng.below(a.size()));
    const auto y = a.vector(rng.below(a.size()));
    CHECK(std::fabs(cosine(x, y) - cosine(y, x)) <= 1e-12);
  }

  SkipGramParams strict = p;
  strict.min_count = 1000000;
  CHECK_THROWS_AS(train_skipgram(seqs, strict), TrainingError);
}

TEST_CASE("embed lookups") {
  const EmbeddingTable t({.dimension = 3}, {"x", "y"}, {2, 2}, {1, 2, 3, -1, 0, 5});
  const auto x = embed(t, "x");
  CHECK(x == std::vector<double>{1, 2, 3});
  EmbedStats stats;
  const auto oov = embed(t, "nope", &stats);
  CHECK(oov == std::vector<double>(3, 0.0));
  CHECK(stats.out_of_vocab == 1);
  CHECK(stats.lookups == 1);

  const std::vector<std::string> words{"x", "y", "nope"};
  const auto mean = embed_phrase(t, words);
  const double expected[] = {(1 - 1 + 0) / 3.0, (2 + 0 + 0) / 3.0, (3 + 5 + 0) / 3.0};
  for (int i = 0; i < 3; ++i) CHECK(mean[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("most_similar") {
  SUBCASE("two-token vocabulary") {
    const EmbeddingTable t({.dimension = 2}, {"p", "q"}, {1, 1}, {1, 0, 0, 1});
    const auto r = most_similar(t, "p", 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0].first == "q");
  }
  SUBCASE("matches a full scan") {
    Rng rng(12);
    std::vector<std::string> toks;
    std::vector<double> vals;
    for (int i = 0; i < 40; ++i) {
      toks.push_back("t" + std::to_string(i));
      for (double x : random_vec(rng, 5)) vals.push_back(x);
    }
    const EmbeddingTable t({.dimension = 5}, toks, std::vector<std::size_t>(40, 1), vals);
    for (int q = 0; q < 40; q += 7) {
      std::vector<std::pair<double, std::string>> scan;
      for (int i = 0; i < 40; ++i)
        if (i != q) scan.emplace_back(-cosine(t.vector(q), t.vector(i)), toks[i]);
      std::sort(scan.begin(), scan.end());
      const auto got = most_similar(t, toks[q], 6);
      REQUIRE(got.size() == 6);
      for (int k = 0; k < 6; ++k) {
        CHECK(got[k].first == scan[k].second);
        CHECK(got[k].second == doctest::Approx(-scan[k].first));
      }
      // the query would head its own unfiltered ranking
      CHECK(cosine(t.vector(q), t.vector(q)) == doctest::Approx(1.0));
      CHECK(cosine(t.vector(q), t.vector(q)) >= got[0].second);
    }
  }
  SUBCASE("unknown query") {
    const EmbeddingTable t({.dimension = 2}, {"p", "q"}, {1, 1}, {1, 0, 0, 1});
    CHECK_THROWS_AS(most_similar(t, "r", 1), LookupError);
  }
}

TEST_CASE("negative-sampling gradient matches central differences") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 6;
    auto center = random_vec(rng, d);
    auto context = random_vec(rng, d);
    std::vector<std::vector<double>> negs{random_vec(rng, d), random_vec(rng, d), random_vec(rng, d)};
    const auto g = sgns_gradient(center, context, negs);
    const double h = 1e-6;
    auto check = [&](std::vector<double>& target, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < d; ++i) {
        const double keep = target[i];
        target[i] = keep + h;
        const double up = sgns_loss(center, context, negs);
        target[i] = keep - h;
        const double down = sgns_loss(center, context, negs);
        target[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double rel = std::fabs(numeric - analytic[i]) / std::max(1e-8, std::fabs(numeric) + std::fabs(analytic[i]));
        CHECK(rel < 1e-4);
      }
    };
    check(center, g.center);
    check(context, g.context);
    for (std::size_t k = 0; k < negs.size(); ++k) check(negs[k], g.negatives[k]);
  }
}

TEST_CASE("embedding artifact round-trips") {
  std::vector<PhraseSequence> seqs;
  for (const auto& r : fixtures::synthetic(60, 5)) seqs.push_back(build_phrase_sequence(r));
  SkipGramParams p;
  p.epochs = 1;
  const auto t = train_skipgram(seqs, p);
  const std::vector<std::string> ids{"a", "b"};
  const auto back = read_embedding_artifact(write_embedding_artifact(t, "0123456789abcdef", ids));
  CHECK(back.table == t);
  CHECK(back.config_hash == "0123456789abcdef");
  CHECK(back.fit_ids == ids);
}
