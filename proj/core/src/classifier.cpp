#include "rjm/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "rjm/artifact.hpp"
#include "rjm/error.hpp"
#include "rjm/forest.hpp"
#include "rjm/gbt.hpp"
#include "rjm/neural.hpp"

namespace rjm {

namespace {

template <class Source>
Matrix gather(const Source& m, std::size_t rows, std::size_t cols, std::span<const std::size_t> columns) {
  for (auto c : columns) {
    if (c >= cols) throw ShapeError("column " + std::to_string(c) + " out of range for width " + std::to_string(cols));
  }
  Matrix out(rows, columns.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < columns.size(); ++j) out(i, j) = r[columns[j]];
  }
  return out;
}

}  // namespace

Matrix select_columns(const FeatureMatrix& m, std::span<const std::size_t> columns) {
  return gather(m, m.rows(), m.cols, columns);
}

Matrix select_columns(const Matrix& m, std::span<const std::size_t> columns) {
  return gather(m, m.rows, m.cols, columns);
}

std::vector<std::size_t> column_range(std::size_t begin, std::size_t end) {
  if (end < begin) throw ArgumentError("column_range: end before begin");
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

std::string_view model_kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::forest: return "forest";
    case ModelKind::boosted: return "boosted";
    case ModelKind::cnn: return "cnn";
    case ModelKind::recurrent: return "recurrent";
  }
  return "unknown";
}

std::vector<double> Classifier::predict_proba(const FeatureVector& features) const {
  if (features.layout_version != layout_version_) {
    throw ConfigError("feature layout version " + std::to_string(features.layout_version) +
                      " does not match model layout version " + std::to_string(layout_version_));
  }
  return predict_row(features.values);
}

std::size_t argmax(std::span<const double> v) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::string write_model_artifact(const Classifier& model, std::string_view config_hash,
                                 std::span<const std::string> fit_ids) {
  std::ostringstream out;
  artifact::write_header(out, {"model", kModelArtifactVersion, std::string(config_hash)});
  nlohmann::json j{{"model_kind", model_kind_name(model.kind())},
                   {"fit_ids", std::vector<std::string>(fit_ids.begin(), fit_ids.end())},
                   {"model", model.to_json()}};
  out << j.dump() << '\n';
  return out.str();
}

LoadedModel read_model_artifact(std::string_view text) {
  std::istringstream in{std::string(text)};
  const auto header = artifact::read_header(in, "model", kModelArtifactVersion, "train");
  LoadedModel loaded;
  loaded.config_hash = header.config_hash;
  nlohmann::json j;
  try {
    in >> j;
    loaded.fit_ids = j.at("fit_ids").get<std::vector<std::string>>();
    const auto kind = j.at("model_kind").get<std::string>();
    const auto& body = j.at("model");
    if (kind == "forest") {
      loaded.model = std::make_unique<ForestModel>(ForestModel::from_json(body));
    } else if (kind == "boosted") {
      loaded.model = std::make_unique<BoostedModel>(BoostedModel::from_json(body));
    } else if (kind == "cnn" || kind == "recurrent") {
      loaded.model = std::make_unique<NeuralModel>(NeuralModel::from_json(body));
    } else {
      throw StaleArtifactError("train", "model artifact: unknown model kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw StaleArtifactError("train", std::string("model artifact: ") + e.what());
  }
  return loaded;
}

}  // namespace rjm
