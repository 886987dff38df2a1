#include "rjm/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <json.hpp>
#include <sstream>

#include "rjm/artifact.hpp"
#include "rjm/error.hpp"
#include "rjm/rng.hpp"

namespace rjm {

using nlohmann::json;

std::string YearMonth::to_string() const { return std::to_string(year) + "-" + std::to_string(month); }

YearMonth YearMonth::parse(std::string_view text) {
  auto read_int = [&](std::string_view part) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw SchemaError("date", "cannot read '" + std::string(text) + "'");
    }
    return value;
  };
  const auto sep = text.find_first_of("-./");
  YearMonth ym;
  ym.year = read_int(text.substr(0, sep));
  ym.month = sep == std::string_view::npos ? 1 : read_int(text.substr(sep + 1));
  if (ym.month < 1 || ym.month > 12 || ym.year < 1900 || ym.year > 2200) {
    throw SchemaError("date", "out of range '" + std::string(text) + "'");
  }
  return ym;
}

int whole_quarters(YearMonth start, YearMonth end) noexcept {
  return std::max(1, (end.months() - start.months()) / 3);
}

std::string_view task_name(Task task) noexcept {
  switch (task) {
    case Task::degree: return "degree";
    case Task::salary: return "salary";
    case Task::size: return "size";
    case Task::position: return "position";
  }
  return "?";
}

int TargetLabels::get(Task task) const noexcept {
  switch (task) {
    case Task::degree: return degree;
    case Task::salary: return salary;
    case Task::size: return size;
    case Task::position: return position;
  }
  return -1;
}

int ClassMaps::class_count(Task task) const noexcept {
  switch (task) {
    case Task::degree: return kDegreeClasses;
    case Task::salary: return kSalaryClasses;
    case Task::size: return static_cast<int>(size_bands.size());
    case Task::position: return static_cast<int>(position_vocab.size());
  }
  return 0;
}

int ClassMaps::position_id(std::string_view position) const noexcept {
  auto it = std::find(position_vocab.begin(), position_vocab.end(), position);
  return it == position_vocab.end() ? -1 : static_cast<int>(it - position_vocab.begin());
}

int ClassMaps::size_id(int band) const noexcept {
  auto it = std::lower_bound(size_bands.begin(), size_bands.end(), band);
  return it == size_bands.end() || *it != band ? -1 : static_cast<int>(it - size_bands.begin());
}

std::string ClassMaps::label_name(Task task, int class_id) const {
  if (class_id < 0 || class_id >= class_count(task)) {
    throw LabelError("class id " + std::to_string(class_id) + " out of range for task " +
                     std::string(task_name(task)));
  }
  switch (task) {
    case Task::position: return position_vocab[class_id];
    case Task::size: return "size_" + std::to_string(size_bands[class_id]);
    case Task::salary: return "salary_" + std::to_string(class_id);
    case Task::degree: return "degree_" + std::to_string(class_id);
  }
  return {};
}

namespace {

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) throw SchemaError(field, "missing");
  return *it;
}

std::string text_field(const json& obj, const char* field, bool optional) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    if (optional) return std::string(kEmptyPhrase);
    throw SchemaError(field, "missing");
  }
  std::string value;
  if (it->is_string()) {
    value = it->get<std::string>();
  } else if (it->is_number_integer()) {
    value = std::to_string(it->get<long long>());
  } else {
    throw SchemaError(field, "expected text");
  }
  if (value.empty()) {
    if (optional) return std::string(kEmptyPhrase);
    throw SchemaError(field, "empty");
  }
  return value;
}

int int_field(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return value;
  }
  throw SchemaError(field, "expected an integer");
}

bool is_open_marker(std::string_view s) {
  return s == kOpenEnded || s == "至今" || s == "present" || s == "Present";
}

WorkExperience parse_experience(const json& obj) {
  if (!obj.is_object()) throw SchemaError("workExperienceList", "entries must be objects");
  WorkExperience e;
  e.position_name = text_field(obj, "position_name", false);
  e.department = text_field(obj, "department", true);
  e.industry = text_field(obj, "industry", false);
  e.salary = int_field(obj, "salary");
  if (e.salary < 0 || e.salary > 6) throw SchemaError("salary", "outside [0,6]");
  e.size = int_field(obj, "size");
  if (e.size < 0) throw SchemaError("size", "negative");
  e.experience_type = text_field(obj, "type", true);
  e.start_date = YearMonth::parse(text_field(obj, "start_date", false));
  const std::string end = text_field(obj, "end_date", false);
  if (!is_open_marker(end)) {
    e.end_date = YearMonth::parse(end);
    if (*e.end_date < e.start_date) throw SchemaError("end_date", "before start_date");
  }
  return e;
}

void compute_quarters(WorkExperience& e, std::optional<YearMonth> reference) {
  YearMonth end = e.end_date.value_or(reference.value_or(e.start_date));
  if (end < e.start_date) end = e.start_date;
  e.quarter_count = whole_quarters(e.start_date, end);
}

json experience_to_json(const WorkExperience& e) {
  json obj = json::object();
  obj["size"] = e.size;
  obj["salary"] = e.salary;
  obj["end_date"] = e.end_date ? e.end_date->to_string() : std::string(kOpenEnded);
  obj["start_date"] = e.start_date.to_string();
  obj["industry"] = e.industry;
  obj["position_name"] = e.position_name;
  obj["department"] = e.department == kEmptyPhrase ? std::string() : e.department;
  obj["type"] = e.experience_type == kEmptyPhrase ? std::string() : e.experience_type;
  return obj;
}

json resume_to_json(const Resume& r) {
  json obj = json::object();
  obj["id"] = r.id;
  obj["major"] = r.major == kEmptyPhrase ? std::string() : r.major;
  obj["degree"] = r.degree;
  obj["gender"] = r.gender == kEmptyPhrase ? std::string() : r.gender;
  obj["age"] = r.age;
  json list = json::array();
  for (const auto& e : r.experiences) list.push_back(experience_to_json(e));
  obj["workExperienceList"] = std::move(list);
  return obj;
}

Resume resume_from_json(const json& obj, const ParseOptions& options) {
  if (!obj.is_object()) throw SchemaError("<record>", "expected an object");
  Resume r;
  r.id = text_field(obj, "id", false);
  const json& list = require(obj, "workExperienceList");
  if (!list.is_array()) throw SchemaError("workExperienceList", "expected an array");
  if (list.empty()) throw SchemaError("workExperienceList", "empty");
  r.major = text_field(obj, "major", true);
  r.degree = int_field(obj, "degree");
  if (r.degree < 0 || r.degree > 2) throw SchemaError("degree", "outside [0,2]");
  r.gender = text_field(obj, "gender", true);
  r.age = int_field(obj, "age");
  if (r.age <= 0) throw SchemaError("age", "must be positive");
  r.experiences.reserve(list.size());
  for (const auto& item : list) r.experiences.push_back(parse_experience(item));
  std::stable_sort(r.experiences.begin(), r.experiences.end(),
                   [](const WorkExperience& a, const WorkExperience& b) { return a.start_date < b.start_date; });
  for (auto& e : r.experiences) compute_quarters(e, options.reference_date);
  return r;
}

}  // namespace

Resume parse_resume(std::string_view json_text, const ParseOptions& options) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return resume_from_json(obj, options);
}

std::string serialize_resume(const Resume& resume) { return resume_to_json(resume).dump(); }

void resolve_open_dates(Resume& resume, YearMonth reference) {
  for (auto& e : resume.experiences) compute_quarters(e, reference);
}

std::optional<YearMonth> latest_closed_date(std::span<const Resume> resumes) {
  std::optional<YearMonth> latest;
  for (const auto& r : resumes) {
    for (const auto& e : r.experiences) {
      const YearMonth d = e.end_date.value_or(e.start_date);
      if (!latest || *latest < d) latest = d;
    }
  }
  return latest;
}

Corpus build_corpus(std::vector<Resume> resumes, std::size_t top_k) {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& r : resumes) {
    if (!r.experiences.empty()) ++freq[r.experiences.back().position_name];
  }
  if (freq.size() < top_k) {
    throw ConfigError("only " + std::to_string(freq.size()) + " distinct current positions, top_k=" +
                      std::to_string(top_k));
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  // std::map iteration is already in byte order, so a stable sort on count
  // leaves ties lexicographic.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Corpus corpus;
  for (std::size_t i = 0; i < top_k; ++i) corpus.classes.position_vocab.push_back(ranked[i].first);
  std::vector<std::string> sorted_vocab = corpus.classes.position_vocab;
  std::sort(sorted_vocab.begin(), sorted_vocab.end());

  std::vector<int> bands;
  for (auto& r : resumes) {
    if (r.experiences.empty()) continue;
    if (!std::binary_search(sorted_vocab.begin(), sorted_vocab.end(), r.experiences.back().position_name)) continue;
    bands.push_back(r.experiences.back().size);
    corpus.resumes.push_back(std::move(r));
  }
  std::sort(bands.begin(), bands.end());
  bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
  corpus.classes.size_bands = std::move(bands);
  if (auto latest = latest_closed_date(corpus.resumes)) corpus.reference_date = *latest;
  return corpus;
}

TargetLabels extract_targets(const Resume& resume, const ClassMaps& classes) {
  if (resume.experiences.empty()) throw LabelError("resume '" + resume.id + "' has no experiences");
  const WorkExperience& last = resume.experiences.back();
  TargetLabels t;
  t.degree = resume.degree;
  t.salary = last.salary;
  t.size = classes.size_id(last.size);
  if (t.size < 0) throw LabelError("resume '" + resume.id + "': size band " + std::to_string(last.size) + " unknown");
  t.position = classes.position_id(last.position_name);
  if (t.position < 0) {
    throw LabelError("resume '" + resume.id + "': position '" + last.position_name + "' not in vocabulary");
  }
  return t;
}

std::vector<SplitTag> assign_split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ArgumentError("test_fraction must be in (0, 1)");
  const std::size_t classes = corpus.classes.position_vocab.size();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < corpus.resumes.size(); ++i) {
    const int c = extract_targets(corpus.resumes[i], corpus.classes).position;
    members[c].push_back(i);
  }

  std::vector<std::size_t> quota(classes, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t eligible = 0;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].size() < 2) {
      if (!members[c].empty()) {
        spdlog::warn("position class '{}' has {} member(s); placed entirely in train",
                     corpus.classes.position_vocab[c], members[c].size());
      }
      continue;
    }
    eligible += members[c].size();
    const double exact = test_fraction * static_cast<double>(members[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(eligible)));
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, c] : remainders) {
    if (assigned >= target) break;
    if (quota[c] + 1 < members[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  std::vector<SplitTag> tags(corpus.resumes.size(), SplitTag::train);
  for (std::size_t c = 0; c < classes; ++c) {
    if (quota[c] == 0) continue;
    Rng rng(derive_seed(seed, c));
    auto ids = members[c];
    rng.shuffle(std::span(ids));
    for (std::size_t j = 0; j < quota[c]; ++j) tags[ids[j]] = SplitTag::test;
  }
  return tags;
}

SplitCorpus split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  const auto tags = assign_split(corpus, test_fraction, seed);
  SplitCorpus out;
  for (Corpus* part : {&out.train, &out.test}) {
    part->classes = corpus.classes;
    part->reference_date = corpus.reference_date;
    part->split_seed = seed;
    part->test_fraction = test_fraction;
  }
  for (std::size_t i = 0; i < tags.size(); ++i) {
    Corpus& part = tags[i] == SplitTag::train ? out.train : out.test;
    part.resumes.push_back(corpus.resumes[i]);
    part.split.push_back(tags[i]);
  }
  return out;
}

Corpus ingest(std::istream& records, const IngestOptions& options, IngestReport* report) {
  IngestReport local;
  std::vector<Resume> parsed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(records, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.records;
    try {
      parsed.push_back(parse_resume(line));
    } catch (const Error& e) {
      ++local.malformed;
      spdlog::debug("line {}: dropped: {}", line_no, e.what());
    }
  }
  if (local.malformed > 0) spdlog::warn("dropped {} malformed record(s) of {}", local.malformed, local.records);

  std::optional<YearMonth> reference = options.reference_date;
  if (!reference) reference = latest_closed_date(parsed);
  for (auto& r : parsed) resolve_open_dates(r, reference.value_or(YearMonth{}));

  const std::size_t before = parsed.size();
  Corpus corpus = build_corpus(std::move(parsed), options.top_k);
  if (reference) corpus.reference_date = *reference;
  local.out_of_vocab = before - corpus.resumes.size();
  if (report) *report = local;
  return corpus;
}

std::string write_corpus_artifact(const Corpus& corpus, std::string_view config_hash) {
  std::ostringstream out;
  artifact::write_header(out, {"corpus", kCorpusArtifactVersion, std::string(config_hash)});
  json meta = json::object();
  meta["reference_date"] = corpus.reference_date.to_string();
  meta["position_vocab"] = corpus.classes.position_vocab;
  meta["size_bands"] = corpus.classes.size_bands;
  meta["split_seed"] = corpus.split_seed;
  meta["test_fraction"] = corpus.test_fraction;
  meta["resumes"] = corpus.resumes.size();
  meta["has_split"] = !corpus.split.empty();
  out << meta.dump() << '\n';
  for (std::size_t i = 0; i < corpus.resumes.size(); ++i) {
    const char* tag = corpus.split.empty() ? "-" : (corpus.split[i] == SplitTag::train ? "train" : "test");
    out << tag << '\t' << serialize_resume(corpus.resumes[i]) << '\n';
  }
  return out.str();
}

Corpus read_corpus_artifact(std::string_view text, std::string* config_hash) {
  std::istringstream in{std::string(text)};
  const auto header = artifact::read_header(in, "corpus", kCorpusArtifactVersion, "ingest");
  if (config_hash) *config_hash = header.config_hash;
  std::string line;
  if (!std::getline(in, line)) throw StaleArtifactError("ingest", "corpus artifact truncated");
  const json meta = json::parse(line);
  Corpus corpus;
  corpus.reference_date = YearMonth::parse(meta.at("reference_date").get<std::string>());
  corpus.classes.position_vocab = meta.at("position_vocab").get<std::vector<std::string>>();
  corpus.classes.size_bands = meta.at("size_bands").get<std::vector<int>>();
  corpus.split_seed = meta.at("split_seed").get<std::uint64_t>();
  corpus.test_fraction = meta.at("test_fraction").get<double>();
  const bool has_split = meta.at("has_split").get<bool>();
  const ParseOptions options{corpus.reference_date};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw StaleArtifactError("ingest", "corpus artifact: malformed row");
    const std::string_view tag(line.data(), tab);
    corpus.resumes.push_back(parse_resume(std::string_view(line).substr(tab + 1), options));
    if (has_split) corpus.split.push_back(tag == "test" ? SplitTag::test : SplitTag::train);
  }
  if (corpus.resumes.size() != meta.at("resumes").get<std::size_t>()) {
    throw StaleArtifactError("ingest", "corpus artifact: row count mismatch");
  }
  return corpus;
}

}  // namespace rjm
