#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rjm/corpus.hpp"

namespace rjm {

/// Generator for a planted-signal resume corpus. Each resume follows one of
/// several career tracks; successive positions climb that track's ladder with
/// probability `signal` and jump to a random position otherwise, so the
/// current position, salary band, company size and degree are all partially
/// predictable from the earlier history.
struct SynthOptions {
  std::size_t count = 2000;
  std::uint64_t seed = 1;
  double signal = 0.8;
  /// Extra sampling weight of the software track relative to the others.
  double tech_weight = 2.0;
};

std::vector<Resume> synthesize_resumes(const SynthOptions& options);

/// One serialized record per line, same schema as the ingest input.
std::string synthesize_records(const SynthOptions& options);

/// Position names of the software track, lowest rung first.
std::vector<std::string> software_track_positions();

}  // namespace rjm
