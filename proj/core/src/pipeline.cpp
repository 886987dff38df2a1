#include "rjm/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rjm/artifact.hpp"
#include "rjm/classifier.hpp"
#include "rjm/ensemble.hpp"
#include "rjm/error.hpp"
#include "rjm/features.hpp"
#include "rjm/grid_search.hpp"
#include "rjm/rng.hpp"

namespace rjm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream ids for derive_seed.
enum SeedStream : std::uint64_t { kSplitSeed = 1, kEmbedSeed, kCoarseSeed, kFineSeed, kSmallTopicSeed, kLargeTopicSeed };
std::uint64_t model_seed(std::uint64_t seed, Task task, std::size_t model) {
  return derive_seed(seed, 100 + 10 * static_cast<std::uint64_t>(task) + model);
}

class Reader {
 public:
  Reader(const json& j, std::string section, std::initializer_list<const char*> keys) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ConfigError("config section '" + section_ + "' must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "' in section '" + section_ + "'");
    }
  }

  template <class T>
  void operator()(const char* key, T& target) const {
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + section_ + "." + key + "': " + e.what());
    }
  }

  const json* child(const char* key) const { return j_.contains(key) ? &j_.at(key) : nullptr; }

 private:
  const json& j_;
  std::string section_;
};

json embedding_json(const SkipGramParams& p) {
  return {{"dimension", p.dimension}, {"window", p.window},       {"negatives", p.negatives},
          {"epochs", p.epochs},       {"min_count", p.min_count}, {"learning_rate", p.learning_rate}};
}

json forest_json(const ForestParams& p) {
  return {{"trees", p.trees},
          {"max_depth", p.max_depth},
          {"feature_fraction", p.feature_fraction},
          {"min_samples_leaf", p.min_samples_leaf},
          {"bootstrap", p.bootstrap}};
}

json boost_json(const BoostParams& p) {
  return {{"rounds", p.rounds},     {"learning_rate", p.learning_rate},       {"max_depth", p.max_depth},
          {"lambda", p.lambda},     {"min_child_weight", p.min_child_weight}, {"gamma", p.gamma}};
}

json neural_json(const NeuralParams& p) {
  return {{"epochs", p.epochs},   {"batch_size", p.batch_size}, {"learning_rate", p.learning_rate},
          {"momentum", p.momentum}, {"clip_norm", p.clip_norm}, {"weight_decay", p.weight_decay},
          {"filters", p.filters},
          {"kernel", p.kernel},   {"pool", p.pool},             {"hidden", p.hidden},
          {"side_path", p.side_path}};
}

void read_neural(const json& j, const std::string& name, NeuralParams& p) {
  Reader r(j, name,
           {"epochs", "batch_size", "learning_rate", "momentum", "clip_norm", "weight_decay", "filters", "kernel", "pool",
            "hidden", "side_path"});
  r("epochs", p.epochs);
  r("batch_size", p.batch_size);
  r("learning_rate", p.learning_rate);
  r("momentum", p.momentum);
  r("clip_norm", p.clip_norm);
  r("weight_decay", p.weight_decay);
  r("filters", p.filters);
  r("kernel", p.kernel);
  r("pool", p.pool);
  r("hidden", p.hidden);
  r("side_path", p.side_path);
}

std::string hash_json(std::string_view stage, const std::string& upstream, const json& settings) {
  artifact::Hasher h;
  h.update(stage).update(upstream).update(settings.dump());
  return h.hex();
}

struct Partition {
  std::vector<Resume> train;
  std::vector<Resume> test;
};

Partition partition(const Corpus& corpus) {
  if (corpus.split.size() != corpus.resumes.size()) throw StaleArtifactError("ingest", "corpus artifact has no split");
  Partition p;
  for (std::size_t i = 0; i < corpus.resumes.size(); ++i) {
    (corpus.split[i] == SplitTag::train ? p.train : p.test).push_back(corpus.resumes[i]);
  }
  return p;
}

std::vector<std::string> ids_of(std::span<const Resume> resumes) {
  std::vector<std::string> ids;
  ids.reserve(resumes.size());
  for (const auto& r : resumes) ids.push_back(r.id);
  return ids;
}

std::string load(const fs::path& path, std::string_view stage) {
  if (!fs::exists(path)) {
    throw StaleArtifactError(std::string(stage), "missing artifact '" + path.string() + "'");
  }
  return artifact::read_text(path);
}

void require_hash(const std::string& found, const std::string& expected, const fs::path& path, std::string_view stage) {
  if (found != expected) {
    throw StaleArtifactError(std::string(stage), "artifact '" + path.string() + "' was built with config " + found +
                                                     ", the current config expects " + expected);
  }
}

// The corpus plus the hash chain derived from it, checked against the input
// file when that is available.
struct Context {
  Corpus corpus;
  StageHashes hashes;
};

Context open_run(const RunConfig& config) {
  const auto path = paths::corpus(config);
  std::string corpus_hash;
  Context ctx{read_corpus_artifact(load(path, "ingest"), &corpus_hash), {}};
  if (!config.input.empty() && fs::exists(config.input)) {
    require_hash(corpus_hash, ingest_hash(config, artifact::read_text(config.input)), path, "ingest");
  }
  ctx.hashes = chain_hashes(config, corpus_hash);
  return ctx;
}

EmbeddingTable load_embeddings(const RunConfig& config, const StageHashes& h, std::vector<std::string>* fit_ids = nullptr) {
  const auto path = paths::embeddings(config);
  auto loaded = read_embedding_artifact(load(path, "embed"));
  require_hash(loaded.config_hash, h.embed, path, "embed");
  if (fit_ids) *fit_ids = std::move(loaded.fit_ids);
  return std::move(loaded.table);
}

FeatureArtifacts load_feature_artifacts(const RunConfig& config, const Context& ctx) {
  FeatureArtifacts a;
  a.embeddings = load_embeddings(config, ctx.hashes);
  std::string hash;
  a.coarse_clusters = read_kmeans_artifact(load(paths::coarse_clusters(config), "cluster"), &hash);
  require_hash(hash, ctx.hashes.cluster, paths::coarse_clusters(config), "cluster");
  a.fine_clusters = read_kmeans_artifact(load(paths::fine_clusters(config), "cluster"), &hash);
  require_hash(hash, ctx.hashes.cluster, paths::fine_clusters(config), "cluster");
  a.small_topics = read_lda_artifact(load(paths::small_topics(config), "cluster"), &hash);
  require_hash(hash, ctx.hashes.cluster, paths::small_topics(config), "cluster");
  a.large_topics = read_lda_artifact(load(paths::large_topics(config), "cluster"), &hash);
  require_hash(hash, ctx.hashes.cluster, paths::large_topics(config), "cluster");
  const auto dicts = read_dictionaries_artifact(load(paths::dictionaries(config), "featurize"));
  require_hash(dicts.config_hash, ctx.hashes.featurize, paths::dictionaries(config), "featurize");
  a.dictionaries = dicts.dictionaries;
  a.reference_date = dicts.reference_date;
  return a;
}

FeatureMatrix load_features(const Context& ctx, const fs::path& path) {
  std::string hash;
  auto m = read_feature_matrix(load(path, "featurize"), &hash);
  require_hash(hash, ctx.hashes.featurize, path, "featurize");
  return m;
}

std::unique_ptr<Classifier> load_model(const RunConfig& config, const Context& ctx, Task task, const std::string& id,
                                       std::vector<std::string>* fit_ids = nullptr) {
  const auto path = paths::model(config, task, id);
  auto loaded = read_model_artifact(load(path, "train"));
  require_hash(loaded.config_hash, ctx.hashes.train, path, "train");
  if (fit_ids) *fit_ids = std::move(loaded.fit_ids);
  return std::move(loaded.model);
}

// The degree slot is the degree target itself, so degree models never see it.
std::vector<std::size_t> without_target(std::vector<std::size_t> columns, Task task) {
  if (task == Task::degree) std::erase(columns, kDegreeSlot);
  return columns;
}

std::vector<std::size_t> model_columns(const std::string& id, Task task) {
  if (id == "gbt_manual") return without_target(column_range(kManualOffset, kManualOffset + kManualWidth), task);
  if (id == "gbt_semantic") return column_range(kSemanticOffset, kSemanticOffset + kSemanticWidth);
  return without_target(column_range(0, kFeatureWidth), task);
}

// Deterministic holdout for grid search, stratified by nothing: a seeded
// shuffle of the training rows.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout(std::size_t rows, double fraction,
                                                                      std::uint64_t seed) {
  std::vector<std::size_t> order(rows);
  for (std::size_t i = 0; i < rows; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto valid = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(rows)));
  if (valid >= rows) throw ConfigError("grid.validation_fraction leaves no training rows");
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(valid), order.end());
  std::vector<std::size_t> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(valid));
  std::sort(fit.begin(), fit.end());
  std::sort(hold.begin(), hold.end());
  return {fit, hold};
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = m.row(rows[i]);
    std::copy(r.begin(), r.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
  }
  return out;
}

std::vector<int> take(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

double holdout_precision(const Classifier& model, const Matrix& x, std::span<const int> y) {
  std::vector<int> pred(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) pred[i] = static_cast<int>(argmax(model.predict_row(x.row(i))));
  return precision(pred, y);
}

struct Trained {
  std::unique_ptr<Classifier> model;
  std::string surface;  // grid-search table, empty when no search ran
};

Trained train_one(const RunConfig& config, const std::string& id, Task task, std::size_t index, const FeatureMatrix& fm,
                  int classes) {
  const auto y = fm.task_labels(task);
  const auto columns = model_columns(id, task);
  const auto seed = model_seed(config.seed, task, index);
  Trained out;

  if (id == "rf_all") {
    ForestParams p = config.forest;
    p.seed = seed;
    p.threads = config.threads;
    const Matrix x = select_columns(fm, columns);
    if (config.grid.enabled) {
      std::vector<ForestParams> grid;
      for (auto t : config.grid.forest_trees)
        for (auto d : config.grid.forest_depth) {
          auto cell = p;
          cell.trees = t;
          cell.max_depth = d;
          grid.push_back(cell);
        }
      const auto [fit, hold] = holdout(x.rows, config.grid.validation_fraction, derive_seed(seed, 7));
      const Matrix xf = take_rows(x, fit), xh = take_rows(x, hold);
      const auto yf = take(y, fit), yh = take(y, hold);
      const auto result = grid_search<ForestParams>(grid, [&](const ForestParams& cell) {
        return holdout_precision(train_random_forest(xf, yf, classes, cell), xh, yh);
      });
      out.surface = surface_tsv<ForestParams>(result, [](const ForestParams& c) {
        return std::vector<std::pair<std::string, std::string>>{{"trees", std::to_string(c.trees)},
                                                                {"max_depth", std::to_string(c.max_depth)}};
      });
      p = result.best_params();
    }
    auto model = train_random_forest(x, y, classes, p);
    model.set_columns(columns);
    out.model = std::make_unique<ForestModel>(std::move(model));
  } else if (id.starts_with("gbt_")) {
    BoostParams p = config.boost;
    p.seed = seed;
    p.threads = config.threads;
    const Matrix x = select_columns(fm, columns);
    if (config.grid.enabled && id == "gbt_all") {
      std::vector<BoostParams> grid;
      for (auto r : config.grid.boost_rounds)
        for (auto d : config.grid.boost_depth) {
          auto cell = p;
          cell.rounds = r;
          cell.max_depth = d;
          grid.push_back(cell);
        }
      const auto [fit, hold] = holdout(x.rows, config.grid.validation_fraction, derive_seed(seed, 7));
      const Matrix xf = take_rows(x, fit), xh = take_rows(x, hold);
      const auto yf = take(y, fit), yh = take(y, hold);
      const auto result = grid_search<BoostParams>(grid, [&](const BoostParams& cell) {
        return holdout_precision(train_gbt(xf, yf, classes, cell), xh, yh);
      });
      out.surface = surface_tsv<BoostParams>(result, [](const BoostParams& c) {
        return std::vector<std::pair<std::string, std::string>>{{"rounds", std::to_string(c.rounds)},
                                                                {"max_depth", std::to_string(c.max_depth)}};
      });
      p = result.best_params();
    }
    auto model = train_gbt(x, y, classes, p);
    model.set_columns(columns);
    out.model = std::make_unique<BoostedModel>(std::move(model));
  } else {
    const bool cnn = id == "cnn_all";
    NeuralParams p = cnn ? config.cnn : config.recurrent;
    p.seed = seed;
    const Matrix grids = select_columns(fm, column_range(kSemanticOffset, kSemanticOffset + kSemanticWidth));
    const auto side_columns = without_target(column_range(0, kSemanticOffset), task);
    const Matrix side = select_columns(fm, side_columns);
    auto model = train_neural(cnn ? NeuralKind::cnn : NeuralKind::recurrent, grids, &side, y, classes, p);
    if (model.side_width() > 0) model.side_columns = side_columns;
    if (model.aborted) spdlog::warn("{} / {}: training aborted on a non-finite loss", id, task_name(task));
    out.model = std::make_unique<NeuralModel>(std::move(model));
  }
  return out;
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

// Pipeline defaults differ from the library ones where a held-out slice of
// the synthetic training split favoured them.
RunConfig::RunConfig() {
  boost.learning_rate = 0.05;
  for (auto* p : {&cnn, &recurrent}) {
    p->epochs = 20;
    p->learning_rate = 0.01;
    p->weight_decay = 0.01;
    p->side_path = true;
  }
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Reader r(j, "<root>",
           {"workdir", "input", "seed", "top_k", "test_fraction", "reference_date", "threads", "embedding", "clustering",
            "forest", "boost", "cnn", "recurrent", "grid", "ensemble", "recall_n"});
  std::string text;
  if (j.contains("workdir")) {
    r("workdir", text);
    c.workdir = text;
  }
  if (j.contains("input")) {
    r("input", text);
    c.input = text;
  }
  r("seed", c.seed);
  r("top_k", c.top_k);
  r("test_fraction", c.test_fraction);
  if (j.contains("reference_date") && !j.at("reference_date").is_null()) {
    r("reference_date", text);
    c.reference_date = YearMonth::parse(text);
  }
  r("threads", c.threads);
  if (const auto* e = r.child("embedding")) {
    Reader s(*e, "embedding", {"dimension", "window", "negatives", "epochs", "min_count", "learning_rate"});
    s("dimension", c.embedding.dimension);
    s("window", c.embedding.window);
    s("negatives", c.embedding.negatives);
    s("epochs", c.embedding.epochs);
    s("min_count", c.embedding.min_count);
    s("learning_rate", c.embedding.learning_rate);
  }
  if (const auto* e = r.child("clustering")) {
    Reader s(*e, "clustering",
             {"coarse_k", "fine_k", "kmeans_max_iter", "kmeans_restarts", "small_topics", "large_topics", "lda_alpha",
              "lda_beta", "lda_iterations", "lda_infer_iterations"});
    s("coarse_k", c.coarse_k);
    s("fine_k", c.fine_k);
    s("kmeans_max_iter", c.kmeans.max_iter);
    s("kmeans_restarts", c.kmeans.restarts);
    s("small_topics", c.small_topics);
    s("large_topics", c.large_topics);
    s("lda_alpha", c.lda.alpha);
    s("lda_beta", c.lda.beta);
    s("lda_iterations", c.lda.iterations);
    s("lda_infer_iterations", c.lda.infer_iterations);
  }
  if (const auto* e = r.child("forest")) {
    Reader s(*e, "forest", {"trees", "max_depth", "feature_fraction", "min_samples_leaf", "bootstrap"});
    s("trees", c.forest.trees);
    s("max_depth", c.forest.max_depth);
    s("feature_fraction", c.forest.feature_fraction);
    s("min_samples_leaf", c.forest.min_samples_leaf);
    s("bootstrap", c.forest.bootstrap);
  }
  if (const auto* e = r.child("boost")) {
    Reader s(*e, "boost", {"rounds", "learning_rate", "max_depth", "lambda", "min_child_weight", "gamma"});
    s("rounds", c.boost.rounds);
    s("learning_rate", c.boost.learning_rate);
    s("max_depth", c.boost.max_depth);
    s("lambda", c.boost.lambda);
    s("min_child_weight", c.boost.min_child_weight);
    s("gamma", c.boost.gamma);
  }
  if (const auto* e = r.child("cnn")) read_neural(*e, "cnn", c.cnn);
  if (const auto* e = r.child("recurrent")) read_neural(*e, "recurrent", c.recurrent);
  if (const auto* e = r.child("grid")) {
    Reader s(*e, "grid",
             {"enabled", "validation_fraction", "forest_trees", "forest_depth", "boost_rounds", "boost_depth"});
    s("enabled", c.grid.enabled);
    s("validation_fraction", c.grid.validation_fraction);
    s("forest_trees", c.grid.forest_trees);
    s("forest_depth", c.grid.forest_depth);
    s("boost_rounds", c.grid.boost_rounds);
    s("boost_depth", c.grid.boost_depth);
  }
  r("ensemble", c.ensemble);
  r("recall_n", c.recall_n);

  if (c.ensemble.empty()) throw ConfigError("ensemble must name at least one model");
  for (const auto& m : c.ensemble) {
    const auto& specs = model_specs();
    if (std::none_of(specs.begin(), specs.end(), [&](const ModelSpec& s) { return s.id == m; })) {
      throw ConfigError("ensemble member '" + m + "' is not a trained model");
    }
  }
  if (c.recall_n.empty() || std::count(c.recall_n.begin(), c.recall_n.end(), 0u) > 0) {
    throw ConfigError("recall_n must list positive N values");
  }
  if (c.threads == 0) throw ConfigError("threads must be >= 1");
  return c;
}

json RunConfig::to_json() const {
  return {
      {"workdir", workdir.string()},
      {"input", input.string()},
      {"seed", seed},
      {"top_k", top_k},
      {"test_fraction", test_fraction},
      {"reference_date", reference_date ? json(reference_date->to_string()) : json(nullptr)},
      {"threads", threads},
      {"embedding", embedding_json(embedding)},
      {"clustering",
       {{"coarse_k", coarse_k},
        {"fine_k", fine_k},
        {"kmeans_max_iter", kmeans.max_iter},
        {"kmeans_restarts", kmeans.restarts},
        {"small_topics", small_topics},
        {"large_topics", large_topics},
        {"lda_alpha", lda.alpha},
        {"lda_beta", lda.beta},
        {"lda_iterations", lda.iterations},
        {"lda_infer_iterations", lda.infer_iterations}}},
      {"forest", forest_json(forest)},
      {"boost", boost_json(boost)},
      {"cnn", neural_json(cnn)},
      {"recurrent", neural_json(recurrent)},
      {"grid",
       {{"enabled", grid.enabled},
        {"validation_fraction", grid.validation_fraction},
        {"forest_trees", grid.forest_trees},
        {"forest_depth", grid.forest_depth},
        {"boost_rounds", grid.boost_rounds},
        {"boost_depth", grid.boost_depth}}},
      {"ensemble", ensemble},
      {"recall_n", recall_n},
  };
}

RunConfig load_run_config(const fs::path& path) {
  const auto text = artifact::read_text(path);
  try {
    return RunConfig::from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

const std::vector<ModelSpec>& model_specs() {
  static const std::vector<ModelSpec> specs{
      {"gbt_manual", "GBT-manual"}, {"gbt_semantic", "GBT-semantic"}, {"gbt_all", "GBT-all"},
      {"rf_all", "RF-all"},         {"cnn_all", "CNN-all"},           {"recurrent_all", "Recurrent-all"},
  };
  return specs;
}

std::vector<std::string> report_methods() {
  std::vector<std::string> out;
  for (const auto& s : model_specs()) out.push_back(s.method);
  out.insert(out.end(), {"Bagging", "IBagging", "ManualRule"});
  return out;
}

// ---------------------------------------------------------------------------
// Hashes and paths

std::string ingest_hash(const RunConfig& c, std::string_view input_bytes) {
  const json settings{{"input", artifact::hash_hex(input_bytes)},
                      {"seed", c.seed},
                      {"top_k", c.top_k},
                      {"test_fraction", c.test_fraction},
                      {"reference_date", c.reference_date ? json(c.reference_date->to_string()) : json(nullptr)}};
  return hash_json("ingest", "", settings);
}

StageHashes chain_hashes(const RunConfig& c, const std::string& ingest) {
  const json full = c.to_json();
  StageHashes h;
  h.ingest = ingest;
  h.embed = hash_json("embed", h.ingest, {{"seed", c.seed}, {"embedding", full.at("embedding")}});
  h.cluster = hash_json("cluster", h.embed, {{"seed", c.seed}, {"clustering", full.at("clustering")}});
  h.featurize = hash_json("featurize", h.cluster, {{"layout_version", kFeatureLayoutVersion}});
  h.train = hash_json("train", h.featurize,
                      {{"seed", c.seed},
                       {"forest", full.at("forest")},
                       {"boost", full.at("boost")},
                       {"cnn", full.at("cnn")},
                       {"recurrent", full.at("recurrent")},
                       {"grid", full.at("grid")}});
  return h;
}

namespace paths {
fs::path corpus(const RunConfig& c) { return c.workdir / "corpus.art"; }
fs::path embeddings(const RunConfig& c) { return c.workdir / "embeddings.art"; }
fs::path coarse_clusters(const RunConfig& c) { return c.workdir / "kmeans_coarse.art"; }
fs::path fine_clusters(const RunConfig& c) { return c.workdir / "kmeans_fine.art"; }
fs::path small_topics(const RunConfig& c) { return c.workdir / "lda_small.art"; }
fs::path large_topics(const RunConfig& c) { return c.workdir / "lda_large.art"; }
fs::path dictionaries(const RunConfig& c) { return c.workdir / "dictionaries.art"; }
fs::path train_features(const RunConfig& c) { return c.workdir / "features_train.art"; }
fs::path test_features(const RunConfig& c) { return c.workdir / "features_test.art"; }
fs::path model(const RunConfig& c, Task task, std::string_view id) {
  return c.workdir / "models" / (std::string(task_name(task)) + "_" + std::string(id) + ".art");
}
fs::path report_text(const RunConfig& c) { return c.workdir / "report.txt"; }
fs::path report_tsv(const RunConfig& c) { return c.workdir / "report.tsv"; }
fs::path timings(const RunConfig& c) { return c.workdir / "timings.tsv"; }
}  // namespace paths

// ---------------------------------------------------------------------------
// Stages

IngestReport stage_ingest(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("ingest needs an input file");
  const auto bytes = artifact::read_text(config.input);
  std::istringstream in(bytes);
  IngestReport report;
  Corpus corpus = ingest(in, {config.top_k, config.reference_date}, &report);
  if (corpus.resumes.empty()) throw ConfigError("no usable resumes in '" + config.input.string() + "'");
  const auto split_seed = derive_seed(config.seed, kSplitSeed);
  corpus.split = assign_split(corpus, config.test_fraction, split_seed);
  corpus.split_seed = split_seed;
  corpus.test_fraction = config.test_fraction;
  artifact::write_text(paths::corpus(config), write_corpus_artifact(corpus, ingest_hash(config, bytes)));
  const auto test = static_cast<std::size_t>(std::count(corpus.split.begin(), corpus.split.end(), SplitTag::test));
  spdlog::info("ingest: {} records, {} malformed, {} outside the top {} positions; kept {} ({} train, {} test)",
               report.records, report.malformed, report.out_of_vocab, config.top_k, corpus.resumes.size(),
               corpus.resumes.size() - test, test);
  return report;
}

void stage_embed(const RunConfig& config) {
  const auto ctx = open_run(config);
  const auto part = partition(ctx.corpus);
  std::vector<PhraseSequence> sequences;
  sequences.reserve(part.train.size());
  for (const auto& r : part.train) sequences.push_back(build_phrase_sequence(r));
  auto params = config.embedding;
  params.seed = derive_seed(config.seed, kEmbedSeed);
  const auto table = train_skipgram(sequences, params);
  artifact::write_text(paths::embeddings(config),
                       write_embedding_artifact(table, ctx.hashes.embed, ids_of(part.train)));
  spdlog::info("embed: {} tokens, dimension {}", table.size(), table.dimension());
}

void stage_cluster(const RunConfig& config) {
  const auto ctx = open_run(config);
  const auto part = partition(ctx.corpus);
  const auto table = load_embeddings(config, ctx.hashes);

  std::vector<std::vector<double>> vectors;
  vectors.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto v = table.vector(i);
    vectors.emplace_back(v.begin(), v.end());
  }
  auto km = config.kmeans;
  km.k = config.coarse_k;
  km.seed = derive_seed(config.seed, kCoarseSeed);
  const auto coarse = kmeans_fit(vectors, km);
  km.k = config.fine_k;
  km.seed = derive_seed(config.seed, kFineSeed);
  const auto fine = kmeans_fit(vectors, km);
  artifact::write_text(paths::coarse_clusters(config), write_kmeans_artifact(coarse, ctx.hashes.cluster));
  artifact::write_text(paths::fine_clusters(config), write_kmeans_artifact(fine, ctx.hashes.cluster));

  std::vector<std::vector<std::string>> docs;
  docs.reserve(part.train.size());
  for (const auto& r : part.train) docs.push_back(build_phrase_sequence(r).tokens);
  const auto fit_ids = ids_of(part.train);
  auto lp = config.lda;
  lp.topics = config.small_topics;
  lp.seed = derive_seed(config.seed, kSmallTopicSeed);
  const auto small = lda_fit(docs, lp);
  artifact::write_text(paths::small_topics(config), write_lda_artifact(small, ctx.hashes.cluster, fit_ids));
  lp.topics = config.large_topics;
  lp.seed = derive_seed(config.seed, kLargeTopicSeed);
  const auto large = lda_fit(docs, lp);
  artifact::write_text(paths::large_topics(config), write_lda_artifact(large, ctx.hashes.cluster, fit_ids));
  spdlog::info("cluster: k-means inertia {:.4f} (k={}) / {:.4f} (k={}); LDA {} and {} topics over {} documents",
               coarse.inertia, coarse.k(), fine.inertia, fine.k(), small.topic_count(), large.topic_count(),
               docs.size());
}

void stage_featurize(const RunConfig& config) {
  const auto ctx = open_run(config);
  const auto part = partition(ctx.corpus);
  const auto dictionaries = fit_dictionaries(part.train);
  artifact::write_text(paths::dictionaries(config),
                       write_dictionaries_artifact(dictionaries, ctx.corpus.reference_date, ctx.hashes.featurize,
                                                   ids_of(part.train)));
  const auto artifacts = load_feature_artifacts(config, ctx);
  const auto train = featurize_all(part.train, artifacts, ctx.corpus.classes, config.threads);
  const auto test = featurize_all(part.test, artifacts, ctx.corpus.classes, config.threads);
  artifact::write_text(paths::train_features(config), write_feature_matrix(train, ctx.hashes.featurize));
  artifact::write_text(paths::test_features(config), write_feature_matrix(test, ctx.hashes.featurize));
  spdlog::info("featurize: {} train rows, {} test rows, {} columns", train.rows(), test.rows(), train.cols);
}

void stage_train(const RunConfig& config) {
  const auto ctx = open_run(config);
  const auto fm = load_features(ctx, paths::train_features(config));
  if (fm.rows() == 0) throw ConfigError("train: empty training matrix");
  std::ostringstream timing;
  timing << "task\tmodel\tseconds\n";
  for (Task task : kTasks) {
    const int classes = ctx.corpus.classes.class_count(task);
    const auto& specs = model_specs();
    for (std::size_t m = 0; m < specs.size(); ++m) {
      const auto start = std::chrono::steady_clock::now();
      auto trained = train_one(config, specs[m].id, task, m, fm, classes);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      artifact::write_text(paths::model(config, task, specs[m].id),
                           write_model_artifact(*trained.model, ctx.hashes.train, fm.ids));
      if (!trained.surface.empty()) {
        artifact::write_text(config.workdir / "grids" / (std::string(task_name(task)) + "_" + specs[m].id + ".tsv"),
                             trained.surface);
      }
      timing << task_name(task) << '\t' << specs[m].id << '\t' << seconds(elapsed) << '\n';
      spdlog::info("train: {} / {} in {}s", task_name(task), specs[m].id, seconds(elapsed));
    }
  }
  // Wall times vary run to run, so they live outside the report.
  artifact::write_text(paths::timings(config), timing.str());
}

Corpus load_run_corpus(const RunConfig& config) { return open_run(config).corpus; }

FeatureArtifacts load_run_artifacts(const RunConfig& config) { return load_feature_artifacts(config, open_run(config)); }

std::vector<std::string> find_leaks(const RunConfig& config) {
  const auto ctx = open_run(config);
  std::unordered_set<std::string> test_ids;
  for (std::size_t i = 0; i < ctx.corpus.resumes.size(); ++i) {
    if (ctx.corpus.split[i] == SplitTag::test) test_ids.insert(ctx.corpus.resumes[i].id);
  }
  std::set<std::string> leaked;
  auto check = [&](const std::vector<std::string>& fit_ids) {
    for (const auto& id : fit_ids) {
      if (test_ids.count(id)) leaked.insert(id);
    }
  };
  std::vector<std::string> fit_ids;
  load_embeddings(config, ctx.hashes, &fit_ids);
  check(fit_ids);
  for (const auto& p : {paths::small_topics(config), paths::large_topics(config)}) {
    std::string hash;
    read_lda_artifact(load(p, "cluster"), &hash, &fit_ids);
    check(fit_ids);
  }
  check(read_dictionaries_artifact(load(paths::dictionaries(config), "featurize")).fit_ids);
  check(load_features(ctx, paths::train_features(config)).ids);
  for (Task task : kTasks) {
    for (const auto& spec : model_specs()) {
      load_model(config, ctx, task, spec.id, &fit_ids);
      check(fit_ids);
    }
  }
  return {leaked.begin(), leaked.end()};
}

EvaluationReport stage_evaluate(const RunConfig& config) {
  if (const auto leaks = find_leaks(config); !leaks.empty()) {
    throw LeakageError(std::to_string(leaks.size()) + " test resume(s) were used for fitting, e.g. '" + leaks.front() +
                       "'");
  }
  const auto ctx = open_run(config);
  const auto test = load_features(ctx, paths::test_features(config));
  if (test.rows() == 0) throw ConfigError("evaluate: empty test matrix");
  const auto part = partition(ctx.corpus);
  std::vector<TargetLabels> train_labels;
  for (const auto& r : part.train) train_labels.push_back(extract_targets(r, ctx.corpus.classes));
  const auto baseline = fit_baseline(train_labels, ctx.corpus.classes);

  const auto methods = report_methods();
  const auto& specs = model_specs();
  // ranked[method][task][item]
  std::vector<std::array<std::vector<std::vector<int>>, 4>> ranked(methods.size());
  std::array<std::vector<int>, 4> truth;

  for (Task task : kTasks) {
    const auto t = static_cast<std::size_t>(task);
    const auto k = static_cast<std::size_t>(ctx.corpus.classes.class_count(task));
    truth[t] = test.task_labels(task);
    std::vector<std::unique_ptr<Classifier>> models;
    for (const auto& spec : specs) models.push_back(load_model(config, ctx, task, spec.id));
    for (std::size_t i = 0; i < test.rows(); ++i) {
      const auto row = test.row(i);
      EnsembleInput members;
      for (std::size_t m = 0; m < specs.size(); ++m) {
        auto p = models[m]->predict_row(row);
        ranked[m][t].push_back(top_n(p, k));
        if (std::find(config.ensemble.begin(), config.ensemble.end(), specs[m].id) != config.ensemble.end()) {
          members.add(specs[m].id, std::move(p));
        }
      }
      ranked[specs.size()][t].push_back(bagging_rank(members, k));
      ranked[specs.size() + 1][t].push_back(top_n(ibagging(members).combined, k));
      ranked[specs.size() + 2][t].push_back(baseline.ranking[t]);
    }
  }

  EvaluationReport report;
  report.recall_n = config.recall_n;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    report.rows.push_back(score_method(methods[m], ranked[m], truth, report.recall_n));
  }
  std::string ensemble;
  for (const auto& e : config.ensemble) ensemble += (ensemble.empty() ? "" : ",") + e;
  report.metadata = {
      {"seed", std::to_string(config.seed)},
      {"train_resumes", std::to_string(part.train.size())},
      {"test_resumes", std::to_string(part.test.size())},
      {"test_fraction", seconds(config.test_fraction)},
      {"position_classes", std::to_string(ctx.corpus.classes.class_count(Task::position))},
      {"size_classes", std::to_string(ctx.corpus.classes.class_count(Task::size))},
      {"ensemble", ensemble},
      {"feature_layout_version", std::to_string(kFeatureLayoutVersion)},
      {"model_artifact_version", std::to_string(kModelArtifactVersion)},
      {"train_config_hash", ctx.hashes.train},
  };
  report.footnotes = reference_footnotes();
  report.footnotes.push_back("Training wall times are written to timings.tsv, not to this report.");
  artifact::write_text(paths::report_text(config), report.to_text());
  artifact::write_text(paths::report_tsv(config), report.to_tsv());
  return report;
}

EvaluationReport run_pipeline(const RunConfig& config) {
  stage_ingest(config);
  stage_embed(config);
  stage_cluster(config);
  stage_featurize(config);
  stage_train(config);
  return stage_evaluate(config);
}

std::vector<std::string> recommend(const RunConfig& config, std::string_view record, std::size_t n) {
  const auto ctx = open_run(config);
  const auto artifacts = load_feature_artifacts(config, ctx);
  Resume resume = parse_resume(record);
  resolve_open_dates(resume, ctx.corpus.reference_date);
  // Featurization masks the last experience; a placeholder copy of it makes
  // the whole listed history visible.
  resume.experiences.push_back(resume.experiences.back());
  const auto features = featurize(resume, artifacts);

  const auto k = static_cast<std::size_t>(ctx.corpus.classes.class_count(Task::position));
  if (n == 0 || n > k) throw ArgumentError("recommend: n must be in [1, " + std::to_string(k) + "]");
  EnsembleInput members;
  for (const auto& id : config.ensemble) {
    members.add(id, load_model(config, ctx, Task::position, id)->predict_proba(features));
  }
  std::vector<std::string> out;
  for (int c : top_n(ibagging(members).combined, n)) out.push_back(ctx.corpus.classes.label_name(Task::position, c));
  return out;
}

}  // namespace rjm
