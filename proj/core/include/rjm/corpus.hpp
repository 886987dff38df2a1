#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rjm {

/// Stand-in for optional text fields that are absent or blank.
inline constexpr std::string_view kEmptyPhrase = "<empty>";

/// Marker used by the source data for an experience that is still ongoing.
inline constexpr std::string_view kOpenEnded = "今";

struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  int months() const noexcept { return year * 12 + (month - 1); }
  std::string to_string() const;
  static YearMonth from_months(int months) noexcept { return {months / 12, months % 12 + 1}; }

  /// Accepts "2014-8", "2014-08", "2014.8", "2014/8" and a bare year.
  static YearMonth parse(std::string_view text);

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

/// Number of whole quarters covered by [start, end], at least one.
int whole_quarters(YearMonth start, YearMonth end) noexcept;

struct WorkExperience {
  std::string position_name;
  std::string department{kEmptyPhrase};
  std::string industry;
  int salary = 0;  // band in [0, 6]
  int size = 0;    // company-scale band
  std::string experience_type{kEmptyPhrase};
  YearMonth start_date;
  std::optional<YearMonth> end_date;  // nullopt: open-ended
  int quarter_count = 1;

  friend bool operator==(const WorkExperience&, const WorkExperience&) = default;
};

struct Resume {
  std::string id;
  std::string major{kEmptyPhrase};
  int degree = 0;  // [0, 2]
  std::string gender{kEmptyPhrase};
  int age = 0;
  std::vector<WorkExperience> experiences;  // chronological; back() is the current job

  friend bool operator==(const Resume&, const Resume&) = default;
};

struct ParseOptions {
  /// Date that open-ended experiences run up to. Without one, open-ended
  /// experiences are measured up to their own start date until
  /// resolve_open_dates() is called.
  std::optional<YearMonth> reference_date;
};

/// Parses one serialized resume object. Experiences are stably sorted by
/// start date so that the last entry is the current job.
Resume parse_resume(std::string_view json_text, const ParseOptions& options = {});

/// Single-line serialization using the source field names.
std::string serialize_resume(const Resume& resume);

void resolve_open_dates(Resume& resume, YearMonth reference);

/// Latest closed end date (or start date) across all experiences.
std::optional<YearMonth> latest_closed_date(std::span<const Resume> resumes);

enum class Task : std::uint8_t { degree, salary, size, position };
inline constexpr std::array<Task, 4> kTasks{Task::degree, Task::salary, Task::size, Task::position};
std::string_view task_name(Task task) noexcept;

struct TargetLabels {
  int degree = 0;
  int salary = 0;
  int size = 0;
  int position = 0;

  int get(Task task) const noexcept;
  friend bool operator==(const TargetLabels&, const TargetLabels&) = default;
};

/// Per-task label dictionaries, frozen when the corpus is built.
struct ClassMaps {
  std::vector<std::string> position_vocab;  // class id = index
  std::vector<int> size_bands;              // ascending; class id = index

  static constexpr int kDegreeClasses = 3;
  static constexpr int kSalaryClasses = 7;

  int class_count(Task task) const noexcept;
  int position_id(std::string_view position) const noexcept;  // -1 when absent
  int size_id(int band) const noexcept;                        // -1 when absent
  std::string label_name(Task task, int class_id) const;

  friend bool operator==(const ClassMaps&, const ClassMaps&) = default;
};

enum class SplitTag : std::uint8_t { train, test };

struct Corpus {
  std::vector<Resume> resumes;
  ClassMaps classes;
  YearMonth reference_date;
  std::vector<SplitTag> split;  // empty until assign_split(); parallel to resumes
  std::uint64_t split_seed = 0;
  double test_fraction = 0.0;
};

/// Keeps resumes whose current position is among the `top_k` most frequent
/// current positions (ties broken by byte order) and freezes label maps.
Corpus build_corpus(std::vector<Resume> resumes, std::size_t top_k = 32);

TargetLabels extract_targets(const Resume& resume, const ClassMaps& classes);

/// Stratified by position label. Classes with fewer than two members go to
/// train. Per-class test counts use largest-remainder apportionment so the
/// total equals round(test_fraction * eligible).
std::vector<SplitTag> assign_split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

struct SplitCorpus {
  Corpus train;
  Corpus test;
};
SplitCorpus split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

struct IngestOptions {
  std::size_t top_k = 32;
  std::optional<YearMonth> reference_date;  // default: latest closed date in input
};

struct IngestReport {
  std::size_t records = 0;
  std::size_t malformed = 0;     // parse/schema failures, dropped
  std::size_t out_of_vocab = 0;  // current position outside the top_k
};

/// Reads newline-delimited resume records, drops malformed ones, resolves
/// open-ended dates and builds the corpus.
Corpus ingest(std::istream& records, const IngestOptions& options, IngestReport* report = nullptr);

inline constexpr int kCorpusArtifactVersion = 1;
std::string write_corpus_artifact(const Corpus& corpus, std::string_view config_hash);
Corpus read_corpus_artifact(std::string_view text, std::string* config_hash = nullptr);

}  // namespace rjm
