#include <benchmark/benchmark.h>

#include "rjm/clustering.hpp"
#include "rjm/embeddings.hpp"
#include "rjm/ensemble.hpp"
#include "rjm/gbt.hpp"
#include "rjm/neural.hpp"
#include "rjm/rng.hpp"
#include "rjm/synth.hpp"

namespace {

using namespace rjm;

const std::vector<PhraseSequence>& sequences() {
  static const auto seqs = [] {
    std::vector<PhraseSequence> out;
    for (const auto& r : synthesize_resumes({.count = 500, .seed = 3})) out.push_back(build_phrase_sequence(r));
    return out;
  }();
  return seqs;
}

Matrix noise(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

std::vector<int> labels(std::size_t rows, int classes) {
  std::vector<int> y(rows);
  for (std::size_t i = 0; i < rows; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  return y;
}

void skipgram_epoch(benchmark::State& state) {
  SkipGramParams p;
  p.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_skipgram(sequences(), p));
}
BENCHMARK(skipgram_epoch)->Unit(benchmark::kMillisecond);

void kmeans_phrases(benchmark::State& state) {
  Rng rng(1);
  std::vector<std::vector<double>> pts(2000, std::vector<double>(10));
  for (auto& p : pts)
    for (auto& x : p) x = rng.normal();
  const KMeansParams params{.k = static_cast<std::size_t>(state.range(0)), .restarts = 1};
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(pts, params));
}
BENCHMARK(kmeans_phrases)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void boosted_round(benchmark::State& state) {
  const auto x = noise(1000, 547, 2);
  const auto y = labels(1000, static_cast<int>(state.range(0)));
  const BoostParams p{.rounds = 1, .max_depth = 4};
  for (auto _ : state) benchmark::DoNotOptimize(train_gbt(x, y, static_cast<int>(state.range(0)), p));
}
BENCHMARK(boosted_round)->Arg(7)->Arg(32)->Unit(benchmark::kMillisecond);

void neural_batch(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? NeuralKind::cnn : NeuralKind::recurrent;
  NeuralModel m(kind, NeuralParams{}, 32, 0);
  const auto grids = noise(32, 380, 4);
  std::vector<NeuralExample> batch;
  for (std::size_t i = 0; i < 32; ++i) batch.push_back({grids.row(i), {}, static_cast<int>(i % 32)});
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(m.loss_and_gradient(batch, &grad));
  state.SetLabel(kind == NeuralKind::cnn ? "cnn" : "recurrent");
}
BENCHMARK(neural_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void ibagging_vote(benchmark::State& state) {
  Rng rng(5);
  EnsembleInput in;
  for (int c = 0; c < 4; ++c) {
    std::vector<double> d(32);
    for (auto& v : d) v = rng.uniform();
    in.add("m" + std::to_string(c), d);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ibagging(in));
}
BENCHMARK(ibagging_vote);

}  // namespace

BENCHMARK_MAIN();
