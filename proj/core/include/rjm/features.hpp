#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rjm/clustering.hpp"
#include "rjm/corpus.hpp"
#include "rjm/embeddings.hpp"

namespace rjm {

// Fixed feature layout (version 1):
//   [0, 95)    manual features
//   [95, 167)  cluster features: 35 k=64 ids, 35 k=128 ids, 2 topic ids
//   [167, 547) semantic features: 38 phrase slots x 10 embedding dims
inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr std::size_t kManualWidth = 95;
inline constexpr std::size_t kClusterWidth = 72;
inline constexpr std::size_t kSemanticWidth = 380;
inline constexpr std::size_t kFeatureWidth = kManualWidth + kClusterWidth + kSemanticWidth;
inline constexpr std::size_t kManualOffset = 0;
inline constexpr std::size_t kClusterOffset = kManualWidth;
inline constexpr std::size_t kSemanticOffset = kManualWidth + kClusterWidth;

/// Most recent experiences (before the current one) that enter the features.
inline constexpr std::size_t kHistoryWindow = 5;
inline constexpr std::size_t kHistorySlots = kHistoryWindow * kPhrasesPerExperience;  // 35
inline constexpr std::size_t kSemanticSlots = kHistorySlots + kPersonalPhrases;        // 38
inline constexpr std::size_t kSemanticDimension = kSemanticWidth / kSemanticSlots;     // 10

/// Manual slot holding the resume's degree, which is also the degree target.
inline constexpr std::size_t kDegreeSlot = 3;

/// Fill value for slots of experiences the history does not have.
inline constexpr double kPadding = -1.0;

static_assert(kFeatureWidth == 547);
static_assert(kSemanticSlots * kSemanticDimension == kSemanticWidth);

struct FeatureVector {
  std::vector<double> values;
  int layout_version = kFeatureLayoutVersion;
};

/// Insertion-ordered string dictionary. Key 0 is reserved for values never
/// seen while fitting; known values get 1, 2, ... in order of first sight.
class CategoricalDictionary {
 public:
  int add(const std::string& value);
  int key(std::string_view value) const;
  const std::vector<std::string>& entries() const noexcept { return entries_; }
  friend bool operator==(const CategoricalDictionary& a, const CategoricalDictionary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> keys_;
};

struct CategoryDictionaries {
  CategoricalDictionary gender;
  CategoricalDictionary major;
  CategoricalDictionary department;
  CategoricalDictionary industry;
  CategoricalDictionary position;
  CategoricalDictionary type;
  friend bool operator==(const CategoryDictionaries&, const CategoryDictionaries&) = default;
};

CategoryDictionaries fit_dictionaries(std::span<const Resume> resumes);

/// Everything featurization needs; fitted on the training split only.
struct FeatureArtifacts {
  EmbeddingTable embeddings;
  KMeansModel coarse_clusters;  // k = 64
  KMeansModel fine_clusters;    // k = 128
  LdaModel small_topics;        // 32 topics
  LdaModel large_topics;        // 64 topics
  CategoryDictionaries dictionaries;
  YearMonth reference_date;
};

/// All experiences except the current (last) one.
std::span<const WorkExperience> masked_history(const Resume& resume);

/// Name of manual slot `slot` in [0, 95).
std::string manual_feature_name(std::size_t slot);

/// Name of any slot in [0, 547).
std::string feature_name(std::size_t index);

std::vector<double> manual_features(const Resume& resume, const CategoryDictionaries& dictionaries,
                                    YearMonth reference_date);
std::vector<double> cluster_features(const Resume& resume, const FeatureArtifacts& artifacts);
std::vector<double> semantic_features(const Resume& resume, const FeatureArtifacts& artifacts,
                                      EmbedStats* stats = nullptr);

/// manual || cluster || semantic, computed from the masked history only.
FeatureVector featurize(const Resume& resume, const FeatureArtifacts& artifacts);

/// Row-major dense matrix of feature vectors with their ids and labels.
struct FeatureMatrix {
  std::size_t cols = kFeatureWidth;
  int layout_version = kFeatureLayoutVersion;
  std::vector<double> data;
  std::vector<std::string> ids;
  std::vector<TargetLabels> labels;
  std::array<int, 4> class_counts{};  // indexed by Task

  std::size_t rows() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::vector<int> task_labels(Task task) const;
};

FeatureMatrix featurize_all(std::span<const Resume> resumes, const FeatureArtifacts& artifacts,
                            const ClassMaps& classes, unsigned threads = 1);

inline constexpr int kFeatureArtifactVersion = 1;
std::string write_feature_matrix(const FeatureMatrix& matrix, std::string_view config_hash);
FeatureMatrix read_feature_matrix(std::string_view text, std::string* config_hash = nullptr);

std::string write_dictionaries_artifact(const CategoryDictionaries& dictionaries, YearMonth reference_date,
                                        std::string_view config_hash, std::span<const std::string> fit_ids);
struct LoadedDictionaries {
  CategoryDictionaries dictionaries;
  YearMonth reference_date;
  std::string config_hash;
  std::vector<std::string> fit_ids;
};
LoadedDictionaries read_dictionaries_artifact(std::string_view text);

}  // namespace rjm
