#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rjm/corpus.hpp"

namespace rjm {

inline constexpr std::size_t kPhrasesPerExperience = 7;
inline constexpr std::size_t kPersonalPhrases = 3;

std::string salary_token(int band);
std::string size_token(int band);
std::string quarter_token(int quarters);
std::string age_token(int age);

/// The seven phrase slots of one experience:
/// department, industry, position, salary, size, type, quarter.
std::array<std::string, kPhrasesPerExperience> experience_phrases(const WorkExperience& e);

/// Personal phrase slots: age, major, gender.
std::array<std::string, kPersonalPhrases> personal_phrases(const Resume& r);

struct PhraseSequence {
  std::vector<std::string> tokens;
};

/// Chronological experiences, seven phrases each, then age/major/gender:
/// n * 7 + 3 tokens. `include_current` = false drops the last experience.
PhraseSequence build_phrase_sequence(const Resume& resume, bool include_current = true);

struct SkipGramParams {
  std::size_t dimension = 10;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 15;
  std::size_t min_count = 2;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(SkipGramParams params, std::vector<std::string> tokens, std::vector<std::size_t> counts,
                 std::vector<double> vectors);

  const SkipGramParams& params() const noexcept { return params_; }
  std::size_t dimension() const noexcept { return params_.dimension; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t count(std::size_t index) const { return counts_.at(index); }
  std::optional<std::size_t> index_of(std::string_view token) const;
  std::span<const double> vector(std::size_t index) const {
    return {vectors_.data() + index * params_.dimension, params_.dimension};
  }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_ && a.vectors_ == b.vectors_;
  }

 private:
  SkipGramParams params_;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::vector<double> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Skip-gram with negative sampling, plain SGD with a linearly decayed
/// learning rate. Single-threaded and deterministic for a fixed seed.
EmbeddingTable train_skipgram(std::span<const PhraseSequence> sequences, const SkipGramParams& params);

struct EmbedStats {
  std::size_t lookups = 0;
  std::size_t out_of_vocab = 0;
};

/// Stored vector, or the zero vector for unknown tokens.
std::vector<double> embed(const EmbeddingTable& table, std::string_view token, EmbedStats* stats = nullptr);

/// Mean of the constituent word vectors (unknown words contribute zeros).
std::vector<double> embed_phrase(const EmbeddingTable& table, std::span<const std::string> words,
                                 EmbedStats* stats = nullptr);

/// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// Top-k tokens by cosine similarity to `token`, excluding the token itself.
std::vector<std::pair<std::string, double>> most_similar(const EmbeddingTable& table, std::string_view token,
                                                         std::size_t k);

/// Negative-sampling loss of one (center, context) pair:
///   -log s(ctx . c) - sum_k log s(-neg_k . c)
double sgns_loss(std::span<const double> center, std::span<const double> context,
                 const std::vector<std::vector<double>>& negatives);

struct SgnsGradient {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};
SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> context,
                           const std::vector<std::vector<double>>& negatives);

inline constexpr int kEmbeddingArtifactVersion = 1;
std::string write_embedding_artifact(const EmbeddingTable& table, std::string_view config_hash,
                                     std::span<const std::string> fit_ids);
struct LoadedEmbeddings {
  EmbeddingTable table;
  std::string config_hash;
  std::vector<std::string> fit_ids;
};
LoadedEmbeddings read_embedding_artifact(std::string_view text);

}  // namespace rjm
