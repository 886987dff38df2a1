#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rjm/clustering.hpp"
#include "rjm/corpus.hpp"
#include "rjm/embeddings.hpp"
#include "rjm/evaluation.hpp"
#include "rjm/features.hpp"
#include "rjm/forest.hpp"
#include "rjm/gbt.hpp"
#include "rjm/neural.hpp"
#include "rjm/synth.hpp"

namespace rjm {

struct GridConfig {
  bool enabled = false;
  double validation_fraction = 0.2;  // carved from the training split
  std::vector<std::size_t> forest_trees{50, 100};
  std::vector<std::size_t> forest_depth{8, 12};
  std::vector<std::size_t> boost_rounds{20, 40};
  std::vector<std::size_t> boost_depth{3, 4};
};

/// Everything a run depends on besides the input file. Stage seeds are
/// derived from `seed`.
struct RunConfig {
  std::filesystem::path workdir = "run";
  std::filesystem::path input;
  std::uint64_t seed = 1;
  std::size_t top_k = 32;
  double test_fraction = 0.2;
  std::optional<YearMonth> reference_date;
  unsigned threads = 1;

  SkipGramParams embedding;
  std::size_t coarse_k = 64;
  std::size_t fine_k = 128;
  KMeansParams kmeans;
  std::size_t small_topics = 32;
  std::size_t large_topics = 64;
  LdaParams lda;

  ForestParams forest;
  BoostParams boost;
  NeuralParams cnn;
  NeuralParams recurrent;
  GridConfig grid;

  std::vector<std::string> ensemble{"gbt_all", "rf_all", "cnn_all", "recurrent_all"};
  std::vector<std::size_t> recall_n{2, 3, 4};

  RunConfig();

  /// Missing keys keep their defaults; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Base models trained per task, in report order.
struct ModelSpec {
  std::string id;      // file stem, e.g. "gbt_manual"
  std::string method;  // report row, e.g. "GBT-manual"
};
const std::vector<ModelSpec>& model_specs();

/// Report rows in order: the base models, Bagging, IBagging, ManualRule.
std::vector<std::string> report_methods();

/// Content-addressed stage hashes. Each stage hashes its own settings and the
/// hash of the stage before it.
struct StageHashes {
  std::string ingest, embed, cluster, featurize, train;
};
std::string ingest_hash(const RunConfig& config, std::string_view input_bytes);
StageHashes chain_hashes(const RunConfig& config, const std::string& ingest);

/// Artifact file names inside the work directory.
namespace paths {
std::filesystem::path corpus(const RunConfig& c);
std::filesystem::path embeddings(const RunConfig& c);
std::filesystem::path coarse_clusters(const RunConfig& c);
std::filesystem::path fine_clusters(const RunConfig& c);
std::filesystem::path small_topics(const RunConfig& c);
std::filesystem::path large_topics(const RunConfig& c);
std::filesystem::path dictionaries(const RunConfig& c);
std::filesystem::path train_features(const RunConfig& c);
std::filesystem::path test_features(const RunConfig& c);
std::filesystem::path model(const RunConfig& c, Task task, std::string_view model_id);
std::filesystem::path report_text(const RunConfig& c);
std::filesystem::path report_tsv(const RunConfig& c);
std::filesystem::path timings(const RunConfig& c);
}  // namespace paths

IngestReport stage_ingest(const RunConfig& config);
void stage_embed(const RunConfig& config);
void stage_cluster(const RunConfig& config);
void stage_featurize(const RunConfig& config);
void stage_train(const RunConfig& config);
/// Writes report.txt and report.tsv. Throws LeakageError if any fitted
/// artifact saw a test resume.
EvaluationReport stage_evaluate(const RunConfig& config);

/// Runs every stage in order.
EvaluationReport run_pipeline(const RunConfig& config);

/// Top-n positions for one resume record, treating every listed experience
/// as history (the prediction is the next position).
std::vector<std::string> recommend(const RunConfig& config, std::string_view record, std::size_t n);

/// Corpus and fitted feature artifacts of a finished run, hash-checked.
Corpus load_run_corpus(const RunConfig& config);
FeatureArtifacts load_run_artifacts(const RunConfig& config);

/// Lists test ids that any fitted artifact recorded as training input.
std::vector<std::string> find_leaks(const RunConfig& config);

}  // namespace rjm
