#pragma once

#include <cstddef>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rjm/error.hpp"

namespace rjm {

template <class Params>
struct GridCell {
  Params params;
  std::optional<double> metric;  // empty when the cell failed to train
  std::string failure;
};

template <class Params>
struct GridResult {
  std::vector<GridCell<Params>> surface;  // grid order
  std::size_t best = 0;

  const Params& best_params() const { return surface.at(best).params; }
};

/// Evaluates `score(params)` on every cell. The highest metric wins; ties go
/// to the earlier cell. A cell that throws is recorded as missing.
template <class Params, class Score>
GridResult<Params> grid_search(std::span<const Params> grid, Score&& score) {
  if (grid.empty()) throw ArgumentError("grid_search: empty grid");
  GridResult<Params> result;
  std::optional<std::size_t> best;
  for (const auto& p : grid) {
    GridCell<Params> cell{p, std::nullopt, {}};
    try {
      cell.metric = score(p);
    } catch (const std::exception& e) {
      cell.failure = e.what();
    }
    if (cell.metric && (!best || *cell.metric > *result.surface[*best].metric)) best = result.surface.size();
    result.surface.push_back(std::move(cell));
  }
  if (!best) throw TrainingError("grid_search: every cell failed; first failure: " + result.surface.front().failure);
  result.best = *best;
  return result;
}

/// Tab-separated surface: the columns named by `describe` followed by the
/// metric ("NA" for failed cells).
template <class Params>
std::string surface_tsv(const GridResult<Params>& result,
                        const std::function<std::vector<std::pair<std::string, std::string>>(const Params&)>& describe) {
  std::ostringstream out;
  bool first = true;
  char buf[32];
  for (const auto& cell : result.surface) {
    const auto cols = describe(cell.params);
    if (first) {
      for (const auto& [name, value] : cols) out << name << '\t';
      out << "metric\n";
      first = false;
    }
    for (const auto& [name, value] : cols) out << value << '\t';
    if (cell.metric) {
      std::snprintf(buf, sizeof buf, "%.6f", *cell.metric);
      out << buf << '\n';
    } else {
      out << "NA\n";
    }
  }
  return out.str();
}

}  // namespace rjm
