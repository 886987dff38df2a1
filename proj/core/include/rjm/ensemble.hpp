#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rjm {

/// Per-classifier class-probability vectors over one label map.
struct EnsembleInput {
  std::vector<std::vector<double>> distributions;
  std::vector<std::string> classifier_ids;  // optional, parallel to distributions

  void add(std::string id, std::vector<double> distribution) {
    classifier_ids.push_back(std::move(id));
    distributions.push_back(std::move(distribution));
  }
};

/// Plurality of argmax votes. Ties go to the tied class with the larger
/// summed probability, then to the lowest class id.
int bagging_vote(const EnsembleInput& input);

/// Classes ordered by (votes desc, summed probability desc, id asc); the
/// first `n` entries.
std::vector<int> bagging_rank(const EnsembleInput& input, std::size_t n);

struct IBaggingResult {
  int label = 0;
  std::vector<double> combined;  // mean of the input distributions
};

/// Argmax of the summed distributions; ties go to the lowest class id.
IBaggingResult ibagging(const EnsembleInput& input);

/// `n` highest entries of `scores`, descending; ties by ascending id.
std::vector<int> top_n(std::span<const double> scores, std::size_t n);

}  // namespace rjm
