#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rjm/corpus.hpp"

namespace rjm {

/// Fraction of positions where prediction equals truth.
double precision(std::span<const int> predictions, std::span<const int> truth);

/// Fraction of items whose truth is among the first `n` entries of its list.
double recall_at_n(std::span<const std::vector<int>> ranked, std::span<const int> truth, std::size_t n);

/// Most-frequent-label predictor: one frequency ranking per task.
struct BaselineModel {
  std::array<std::vector<int>, 4> ranking;  // indexed by Task; every class id appears once
  std::array<std::vector<std::size_t>, 4> counts;  // training count per entry of ranking
};

/// Ranks training labels by descending frequency; ties by label name byte
/// order. Classes absent from training follow in ascending id order.
BaselineModel fit_baseline(std::span<const TargetLabels> train_labels, const ClassMaps& classes);
std::vector<int> baseline_top_n(const BaselineModel& model, Task task, std::size_t n);

/// Precision and recall@N of one method on every task.
struct MethodScores {
  std::string method;
  std::array<double, 4> precision{};
  std::vector<std::array<double, 4>> recall;  // parallel to EvaluationReport::recall_n
};

/// `ranked[t][i]` is the ranking for item i on task t (at least max(n)
/// entries); `truth[t][i]` its label.
MethodScores score_method(std::string method, const std::array<std::vector<std::vector<int>>, 4>& ranked,
                          const std::array<std::vector<int>, 4>& truth, std::span<const std::size_t> recall_n);

struct EvaluationReport {
  std::vector<std::size_t> recall_n{2, 3, 4};
  std::vector<MethodScores> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> footnotes;

  const MethodScores& row(std::string_view method) const;

  /// Tab-separated: one precision block and one recall block.
  std::string to_tsv() const;
  /// Fixed-width tables for reading in a terminal.
  std::string to_text() const;
};

/// Published figures from a private corpus. They are printed beside our
/// results for orientation only and are not expected to be reproduced.
std::vector<std::string> reference_footnotes();

}  // namespace rjm
