#include "rjm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rjm/error.hpp"

namespace rjm {

namespace {

std::size_t validate(const EnsembleInput& input) {
  if (input.distributions.empty()) throw ArgumentError("ensemble: no classifiers");
  if (!input.classifier_ids.empty() && input.classifier_ids.size() != input.distributions.size()) {
    throw ShapeError("ensemble: classifier ids do not match distributions");
  }
  const std::size_t k = input.distributions.front().size();
  if (k == 0) throw ShapeError("ensemble: empty distribution");
  for (const auto& d : input.distributions) {
    if (d.size() != k) {
      throw ShapeError("ensemble: distribution lengths differ (" + std::to_string(d.size()) + " vs " +
                       std::to_string(k) + ")");
    }
  }
  return k;
}

std::size_t first_max(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct Tally {
  std::vector<int> votes;
  std::vector<double> mass;
};

Tally tally(const EnsembleInput& input, std::size_t k) {
  Tally t{std::vector<int>(k, 0), std::vector<double>(k, 0.0)};
  for (const auto& d : input.distributions) {
    ++t.votes[first_max(d)];
    for (std::size_t c = 0; c < k; ++c) t.mass[c] += d[c];
  }
  return t;
}

}  // namespace

std::vector<int> bagging_rank(const EnsembleInput& input, std::size_t n) {
  const std::size_t k = validate(input);
  if (n == 0 || n > k) throw ArgumentError("bagging_rank: n must be in [1, " + std::to_string(k) + "]");
  const auto t = tally(input, k);
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (t.votes[a] != t.votes[b]) return t.votes[a] > t.votes[b];
    if (t.mass[a] != t.mass[b]) return t.mass[a] > t.mass[b];
    return a < b;
  });
  order.resize(n);
  return order;
}

int bagging_vote(const EnsembleInput& input) { return bagging_rank(input, 1).front(); }

IBaggingResult ibagging(const EnsembleInput& input) {
  const std::size_t k = validate(input);
  IBaggingResult out;
  out.combined.assign(k, 0.0);
  // Sum each class in sorted order so the result does not depend on the
  // order of the classifiers, down to the last bit.
  std::vector<double> column(input.distributions.size());
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < column.size(); ++i) column[i] = input.distributions[i][c];
    std::sort(column.begin(), column.end());
    out.combined[c] = std::accumulate(column.begin(), column.end(), 0.0);
  }
  // argmax on the raw sum, so the normalization below cannot change the winner
  out.label = static_cast<int>(first_max(out.combined));
  const double m = static_cast<double>(input.distributions.size());
  for (auto& v : out.combined) v /= m;
  return out;
}

std::vector<int> top_n(std::span<const double> scores, std::size_t n) {
  if (n == 0 || n > scores.size()) {
    throw ArgumentError("top_n: n = " + std::to_string(n) + " outside [1, " + std::to_string(scores.size()) + "]");
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(n);
  return order;
}

}  // namespace rjm
