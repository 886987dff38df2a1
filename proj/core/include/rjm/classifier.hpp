#pragma once

#include <cstddef>
#include <json.hpp>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rjm/features.hpp"

namespace rjm {

/// Dense row-major training matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Copies `columns` of every row of `m` into a new matrix.
Matrix select_columns(const FeatureMatrix& m, std::span<const std::size_t> columns);
Matrix select_columns(const Matrix& m, std::span<const std::size_t> columns);
std::vector<std::size_t> column_range(std::size_t begin, std::size_t end);

enum class ModelKind { forest, boosted, cnn, recurrent };
std::string_view model_kind_name(ModelKind kind) noexcept;

/// Common surface of every trained estimator: a K-class probability vector
/// for a full-width feature row.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelKind kind() const noexcept = 0;
  virtual int class_count() const noexcept = 0;

  /// `row` is a full feature row (all 547 slots for pipeline models).
  virtual std::vector<double> predict_row(std::span<const double> row) const = 0;

  virtual nlohmann::json to_json() const = 0;

  int layout_version() const noexcept { return layout_version_; }
  void set_layout_version(int v) noexcept { layout_version_ = v; }

  /// Throws ConfigError when the vector was built under another layout.
  std::vector<double> predict_proba(const FeatureVector& features) const;

 private:
  int layout_version_ = kFeatureLayoutVersion;
};

std::size_t argmax(std::span<const double> v) noexcept;

inline constexpr int kModelArtifactVersion = 1;
/// `fit_ids` are the resume ids the model was trained on (kept for the
/// leakage check at evaluation time).
std::string write_model_artifact(const Classifier& model, std::string_view config_hash,
                                 std::span<const std::string> fit_ids = {});
struct LoadedModel {
  std::unique_ptr<Classifier> model;
  std::string config_hash;
  std::vector<std::string> fit_ids;
};
LoadedModel read_model_artifact(std::string_view text);

}  // namespace rjm
