#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rjm {

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansParams {
  std::size_t k = 64;
  std::uint64_t seed = 1;
  std::size_t max_iter = 300;
  double tol = 1e-10;  // stop once no centroid moves farther than this
  std::size_t restarts = 10;
};

class KMeansModel {
 public:
  KMeansModel() = default;
  KMeansModel(std::size_t dimension, std::vector<double> centroids);

  std::size_t k() const noexcept { return dimension_ ? centroids_.size() / dimension_ : 0; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::span<const double> centroid(std::size_t i) const { return {centroids_.data() + i * dimension_, dimension_}; }
  const std::vector<double>& centroids() const noexcept { return centroids_; }

  // Fit diagnostics.
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step of the winning restart

 private:
  std::size_t dimension_ = 0;
  std::vector<double> centroids_;
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` runs, each
/// polished with single-point (Hartigan) moves. When the distinct points admit
/// at most 256 k-subsets, every subset is used as a seeding instead. A cluster
/// that empties is re-seeded at the point farthest from its centroid.
KMeansModel kmeans_fit(std::span<const std::vector<double>> vectors, const KMeansParams& params);

/// Nearest centroid by squared Euclidean distance; ties go to the lower index.
std::size_t kmeans_assign(const KMeansModel& model, std::span<const double> v);

double kmeans_inertia(const KMeansModel& model, std::span<const std::vector<double>> vectors);

// ---------------------------------------------------------------------------
// LDA (collapsed Gibbs sampling)
// ---------------------------------------------------------------------------

struct LdaParams {
  std::size_t topics = 32;
  double alpha = 0.0;  // <= 0 selects 50 / topics
  double beta = 0.01;
  std::size_t iterations = 500;
  std::uint64_t seed = 1;
  std::size_t infer_iterations = 50;  // fold-in sweeps for unseen documents
};

class LdaModel {
 public:
  LdaModel() = default;
  /// `topic_word` is a topics x vocab row-major count matrix.
  LdaModel(LdaParams params, std::vector<std::string> vocab, std::vector<std::int64_t> topic_word);

  std::size_t topic_count() const noexcept { return params_.topics; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  double alpha() const noexcept { return params_.alpha; }
  double beta() const noexcept { return params_.beta; }
  const LdaParams& params() const noexcept { return params_; }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  long word_index(std::string_view token) const;  // -1 when absent

  std::int64_t topic_word_count(std::size_t topic, std::size_t word) const {
    return topic_word_[topic * vocab_.size() + word];
  }
  std::int64_t topic_total(std::size_t topic) const { return topic_totals_[topic]; }

  /// phi_k = (n_kw + beta) / (n_k + V beta)
  std::vector<double> topic_word_distribution(std::size_t topic) const;

  /// Training-time state; empty for models loaded from disk.
  std::vector<std::vector<std::int64_t>> doc_topic;   // per training doc, per topic
  std::vector<std::vector<std::uint32_t>> assignments;  // per training doc, per in-vocab token
  std::vector<std::vector<std::uint32_t>> doc_words;    // word ids of the training docs

  /// (n_dk + alpha) / (N_d + K alpha) for training document d.
  std::vector<double> training_doc_distribution(std::size_t doc) const;

  /// Fold-in estimate of the topic distribution of an unseen document with
  /// topic-word counts held fixed. Seeded from the model, so the result
  /// depends only on the document. Returns an empty vector when no token is in
  /// the vocabulary.
  std::vector<double> infer(std::span<const std::string> doc) const;

  /// Sentinel id returned for documents with no in-vocabulary token.
  std::size_t unknown_topic() const noexcept { return params_.topics; }

 private:
  friend LdaModel lda_fit(std::span<const std::vector<std::string>>, const LdaParams&);
  LdaParams params_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::int64_t> topic_word_;
  std::vector<std::int64_t> topic_totals_;
};

LdaModel lda_fit(std::span<const std::vector<std::string>> docs, const LdaParams& params);

/// Argmax of infer(); ties go to the lower topic id. Documents without any
/// in-vocabulary token get unknown_topic() and set *unknown.
std::size_t lda_dominant_topic(const LdaModel& model, std::span<const std::string> doc, bool* unknown = nullptr);

inline constexpr int kClusterArtifactVersion = 1;
std::string write_kmeans_artifact(const KMeansModel& model, std::string_view config_hash);
KMeansModel read_kmeans_artifact(std::string_view text, std::string* config_hash = nullptr);
/// `fit_ids` name the resumes whose documents trained the model.
std::string write_lda_artifact(const LdaModel& model, std::string_view config_hash,
                               std::span<const std::string> fit_ids = {});
LdaModel read_lda_artifact(std::string_view text, std::string* config_hash = nullptr,
                           std::vector<std::string>* fit_ids = nullptr);

}  // namespace rjm
