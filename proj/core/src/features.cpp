#include "rjm/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <set>
#include <sstream>

#include "rjm/artifact.hpp"
#include "rjm/error.hpp"
#include "rjm/parallel.hpp"

namespace rjm {

int CategoricalDictionary::add(const std::string& value) {
  auto [it, inserted] = keys_.emplace(value, static_cast<int>(entries_.size()) + 1);
  if (inserted) entries_.push_back(value);
  return it->second;
}

int CategoricalDictionary::key(std::string_view value) const {
  auto it = keys_.find(std::string(value));
  return it == keys_.end() ? 0 : it->second;
}

CategoryDictionaries fit_dictionaries(std::span<const Resume> resumes) {
  CategoryDictionaries d;
  for (const auto& r : resumes) {
    d.gender.add(r.gender);
    d.major.add(r.major);
    for (const auto& e : r.experiences) {
      d.department.add(e.department);
      d.industry.add(e.industry);
      d.position.add(e.position_name);
      d.type.add(e.experience_type);
    }
  }
  return d;
}

std::span<const WorkExperience> masked_history(const Resume& resume) {
  if (resume.experiences.empty()) return {};
  return std::span(resume.experiences).first(resume.experiences.size() - 1);
}

namespace {

// Manual catalog. Aggregates come first, then ten fields for each of the five
// most recent masked experiences, then reserved zero slots.
constexpr std::array<const char*, 30> kAggregateNames{
    "gender_key",          "age",                 "major_key",           "degree",
    "history_count",       "salary_max",          "salary_min",          "salary_mean",
    "salary_recent",       "salary_first",        "salary_change",       "salary_increases",
    "salary_decreases",    "size_max",            "size_mean",           "size_recent",
    "size_change",         "age_first_employed",  "quarters_total",      "quarters_mean",
    "quarters_max",        "quarters_recent",     "industry_changes",    "position_changes",
    "department_changes",  "distinct_departments", "distinct_industries", "distinct_positions",
    "typed_fraction",      "career_quarters"};

constexpr std::array<const char*, 10> kExperienceFieldNames{
    "department_key", "industry_key", "position_key", "salary",      "size",
    "type_key",       "quarters",     "start_year",   "start_month", "gap_months"};

constexpr std::size_t kAggregateSlots = kAggregateNames.size();
constexpr std::size_t kExperienceFields = kExperienceFieldNames.size();
constexpr std::size_t kExperienceBlock = kAggregateSlots;
constexpr std::size_t kReservedBlock = kExperienceBlock + kHistoryWindow * kExperienceFields;
static_assert(kReservedBlock <= kManualWidth);

constexpr std::array<const char*, kPhrasesPerExperience> kPhraseNames{
    "department", "industry", "position", "salary", "size", "type", "quarter"};
constexpr std::array<const char*, kPersonalPhrases> kPersonalNames{"age", "major", "gender"};

/// Index of the i-th most recent masked experience.
const WorkExperience* recent(std::span<const WorkExperience> history, std::size_t i) {
  return i < history.size() ? &history[history.size() - 1 - i] : nullptr;
}

template <typename Assign>
void fill_history_ids(const Resume& resume, const EmbeddingTable& table, Assign&& assign, double* out) {
  const auto history = masked_history(resume);
  for (std::size_t r = 0; r < kHistoryWindow; ++r) {
    const WorkExperience* e = recent(history, r);
    if (!e) {
      std::fill(out + r * kPhrasesPerExperience, out + (r + 1) * kPhrasesPerExperience, kPadding);
      continue;
    }
    const auto phrases = experience_phrases(*e);
    for (std::size_t p = 0; p < kPhrasesPerExperience; ++p) {
      out[r * kPhrasesPerExperience + p] = static_cast<double>(assign(embed(table, phrases[p])));
    }
  }
}

std::vector<std::string> masked_document(const Resume& resume) {
  return build_phrase_sequence(resume, /*include_current=*/false).tokens;
}

}  // namespace

std::string manual_feature_name(std::size_t slot) {
  if (slot < kAggregateSlots) return kAggregateNames[slot];
  if (slot < kReservedBlock) {
    const std::size_t rel = slot - kExperienceBlock;
    return "recent" + std::to_string(rel / kExperienceFields) + "_" + kExperienceFieldNames[rel % kExperienceFields];
  }
  if (slot < kManualWidth) return "reserved" + std::to_string(slot - kReservedBlock);
  throw ArgumentError("manual slot out of range");
}

std::string feature_name(std::size_t index) {
  if (index < kClusterOffset) return "manual." + manual_feature_name(index);
  if (index < kSemanticOffset) {
    const std::size_t rel = index - kClusterOffset;
    if (rel < 2 * kHistorySlots) {
      const std::size_t slot = rel % kHistorySlots;
      return std::string(rel < kHistorySlots ? "cluster64." : "cluster128.") + "recent" +
             std::to_string(slot / kPhrasesPerExperience) + "_" + kPhraseNames[slot % kPhrasesPerExperience];
    }
    return rel == 2 * kHistorySlots ? "cluster.topic32" : "cluster.topic64";
  }
  if (index < kFeatureWidth) {
    const std::size_t rel = index - kSemanticOffset;
    const std::size_t slot = rel / kSemanticDimension;
    const std::string dim = std::to_string(rel % kSemanticDimension);
    if (slot < kHistorySlots) {
      return "semantic.recent" + std::to_string(slot / kPhrasesPerExperience) + "_" +
             kPhraseNames[slot % kPhrasesPerExperience] + "." + dim;
    }
    return std::string("semantic.") + kPersonalNames[slot - kHistorySlots] + "." + dim;
  }
  throw ArgumentError("feature index out of range");
}

std::vector<double> manual_features(const Resume& resume, const CategoryDictionaries& dict, YearMonth reference) {
  std::vector<double> f(kManualWidth, 0.0);
  f[0] = dict.gender.key(resume.gender);
  f[1] = resume.age;
  f[2] = dict.major.key(resume.major);
  f[3] = resume.degree;

  const auto history = masked_history(resume);
  const std::size_t n = history.size();
  f[4] = static_cast<double>(n);
  if (n > 0) {
    const auto& first = history.front();
    const auto& last = history.back();
    int smax = 0, smin = 6, zmax = 0, qmax = 0, qtotal = 0;
    double ssum = 0.0, zsum = 0.0;
    int ups = 0, downs = 0, ind_changes = 0, pos_changes = 0, dep_changes = 0, typed = 0;
    std::set<std::string> deps, inds, poss;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = history[i];
      smax = std::max(smax, e.salary);
      smin = std::min(smin, e.salary);
      ssum += e.salary;
      zmax = std::max(zmax, e.size);
      zsum += e.size;
      qmax = std::max(qmax, e.quarter_count);
      qtotal += e.quarter_count;
      deps.insert(e.department);
      inds.insert(e.industry);
      poss.insert(e.position_name);
      if (e.experience_type != kEmptyPhrase) ++typed;
      if (i > 0) {
        const auto& p = history[i - 1];
        if (e.salary > p.salary) ++ups;
        if (e.salary < p.salary) ++downs;
        if (e.industry != p.industry) ++ind_changes;
        if (e.position_name != p.position_name) ++pos_changes;
        if (e.department != p.department) ++dep_changes;
      }
    }
    const double dn = static_cast<double>(n);
    const int career_months = std::max(0, reference.months() - first.start_date.months());
    f[5] = smax;
    f[6] = smin;
    f[7] = ssum / dn;
    f[8] = last.salary;
    f[9] = first.salary;
    f[10] = last.salary - first.salary;
    f[11] = ups;
    f[12] = downs;
    f[13] = zmax;
    f[14] = zsum / dn;
    f[15] = last.size;
    f[16] = last.size - first.size;
    f[17] = resume.age - career_months / 12.0;
    f[18] = qtotal;
    f[19] = qtotal / dn;
    f[20] = qmax;
    f[21] = last.quarter_count;
    f[22] = ind_changes;
    f[23] = pos_changes;
    f[24] = dep_changes;
    f[25] = static_cast<double>(deps.size());
    f[26] = static_cast<double>(inds.size());
    f[27] = static_cast<double>(poss.size());
    f[28] = typed / dn;
    f[29] = career_months / 3;
  }

  for (std::size_t r = 0; r < kHistoryWindow; ++r) {
    double* slot = &f[kExperienceBlock + r * kExperienceFields];
    if (r >= n) {
      std::fill(slot, slot + kExperienceFields, kPadding);
      continue;
    }
    const std::size_t idx = n - 1 - r;
    const auto& e = history[idx];
    slot[0] = dict.department.key(e.department);
    slot[1] = dict.industry.key(e.industry);
    slot[2] = dict.position.key(e.position_name);
    slot[3] = e.salary;
    slot[4] = e.size;
    slot[5] = dict.type.key(e.experience_type);
    slot[6] = e.quarter_count;
    slot[7] = e.start_date.year;
    slot[8] = e.start_date.month;
    if (idx > 0) {
      const auto& prev = history[idx - 1];
      slot[9] = e.start_date.months() - prev.end_date.value_or(reference).months();
    }
  }
  return f;
}

std::vector<double> cluster_features(const Resume& resume, const FeatureArtifacts& a) {
  if (a.coarse_clusters.dimension() != a.embeddings.dimension() ||
      a.fine_clusters.dimension() != a.embeddings.dimension()) {
    throw ConfigError("cluster models and embedding table disagree on dimension");
  }
  std::vector<double> f(kClusterWidth, kPadding);
  fill_history_ids(
      resume, a.embeddings, [&](const std::vector<double>& v) { return kmeans_assign(a.coarse_clusters, v); },
      f.data());
  fill_history_ids(
      resume, a.embeddings, [&](const std::vector<double>& v) { return kmeans_assign(a.fine_clusters, v); },
      f.data() + kHistorySlots);
  const auto doc = masked_document(resume);
  f[2 * kHistorySlots] = static_cast<double>(lda_dominant_topic(a.small_topics, doc));
  f[2 * kHistorySlots + 1] = static_cast<double>(lda_dominant_topic(a.large_topics, doc));
  return f;
}

std::vector<double> semantic_features(const Resume& resume, const FeatureArtifacts& a, EmbedStats* stats) {
  if (a.embeddings.dimension() != kSemanticDimension) {
    throw ConfigError("semantic layout needs " + std::to_string(kSemanticDimension) + "-dim embeddings, got " +
                      std::to_string(a.embeddings.dimension()));
  }
  std::vector<double> f(kSemanticWidth, 0.0);
  auto put = [&](std::size_t slot, std::string_view token) {
    const auto v = embed(a.embeddings, token, stats);
    std::copy(v.begin(), v.end(), f.begin() + static_cast<std::ptrdiff_t>(slot * kSemanticDimension));
  };
  const auto history = masked_history(resume);
  for (std::size_t r = 0; r < kHistoryWindow; ++r) {
    const WorkExperience* e = recent(history, r);
    if (!e) continue;
    const auto phrases = experience_phrases(*e);
    for (std::size_t p = 0; p < kPhrasesPerExperience; ++p) put(r * kPhrasesPerExperience + p, phrases[p]);
  }
  const auto personal = personal_phrases(resume);
  for (std::size_t p = 0; p < kPersonalPhrases; ++p) put(kHistorySlots + p, personal[p]);
  return f;
}

FeatureVector featurize(const Resume& resume, const FeatureArtifacts& artifacts) {
  FeatureVector out;
  out.values.reserve(kFeatureWidth);
  const auto manual = manual_features(resume, artifacts.dictionaries, artifacts.reference_date);
  const auto cluster = cluster_features(resume, artifacts);
  const auto semantic = semantic_features(resume, artifacts);
  out.values.insert(out.values.end(), manual.begin(), manual.end());
  out.values.insert(out.values.end(), cluster.begin(), cluster.end());
  out.values.insert(out.values.end(), semantic.begin(), semantic.end());
  for (double v : out.values) {
    if (!std::isfinite(v)) throw Error("non-finite feature for resume '" + resume.id + "'");
  }
  return out;
}

std::vector<int> FeatureMatrix::task_labels(Task task) const {
  std::vector<int> y;
  y.reserve(labels.size());
  for (const auto& l : labels) y.push_back(l.get(task));
  return y;
}

FeatureMatrix featurize_all(std::span<const Resume> resumes, const FeatureArtifacts& artifacts,
                            const ClassMaps& classes, unsigned threads) {
  FeatureMatrix m;
  m.data.assign(resumes.size() * kFeatureWidth, 0.0);
  m.labels.resize(resumes.size());
  for (const auto& r : resumes) m.ids.push_back(r.id);
  for (Task t : kTasks) m.class_counts[static_cast<std::size_t>(t)] = classes.class_count(t);
  parallel_for(resumes.size(), threads, [&](std::size_t i) {
    const auto fv = featurize(resumes[i], artifacts);
    std::copy(fv.values.begin(), fv.values.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * kFeatureWidth));
    m.labels[i] = extract_targets(resumes[i], classes);
  });
  return m;
}

std::string write_feature_matrix(const FeatureMatrix& m, std::string_view config_hash) {
  std::ostringstream out;
  artifact::write_header(out, {"features", kFeatureArtifactVersion, std::string(config_hash)});
  out << "layout_version " << m.layout_version << " rows " << m.rows() << " cols " << m.cols << " classes";
  for (int c : m.class_counts) out << ' ' << c;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto& l = m.labels[i];
    out << m.ids[i] << '\t' << l.degree << ' ' << l.salary << ' ' << l.size << ' ' << l.position << '\t';
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
  return out.str();
}

FeatureMatrix read_feature_matrix(std::string_view text, std::string* config_hash) {
  std::istringstream in{std::string(text)};
  const auto header = artifact::read_header(in, "features", kFeatureArtifactVersion, "featurize");
  if (config_hash) *config_hash = header.config_hash;
  FeatureMatrix m;
  std::string key;
  std::size_t rows = 0;
  in >> key >> m.layout_version >> key >> rows >> key >> m.cols >> key;
  for (auto& c : m.class_counts) in >> c;
  if (!in) throw StaleArtifactError("featurize", "feature matrix: malformed preamble");
  if (m.layout_version != kFeatureLayoutVersion) {
    throw StaleArtifactError("featurize", "feature layout version " + std::to_string(m.layout_version) +
                                              ", expected " + std::to_string(kFeatureLayoutVersion));
  }
  in.ignore(1);
  m.data.reserve(rows * m.cols);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw StaleArtifactError("featurize", "malformed row");
    m.ids.push_back(line.substr(0, t1));
    std::istringstream ls(line.substr(t1 + 1, t2 - t1 - 1));
    TargetLabels l;
    ls >> l.degree >> l.salary >> l.size >> l.position;
    m.labels.push_back(l);
    const char* p = line.c_str() + t2 + 1;
    for (std::size_t j = 0; j < m.cols; ++j) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw StaleArtifactError("featurize", "short row for '" + m.ids.back() + "'");
      m.data.push_back(v);
      p = end;
    }
  }
  if (m.rows() != rows) throw StaleArtifactError("featurize", "feature matrix: row count mismatch");
  return m;
}

std::string write_dictionaries_artifact(const CategoryDictionaries& d, YearMonth reference_date,
                                        std::string_view config_hash, std::span<const std::string> fit_ids) {
  std::ostringstream out;
  artifact::write_header(out, {"dictionaries", kFeatureArtifactVersion, std::string(config_hash)});
  nlohmann::json j;
  j["reference_date"] = reference_date.to_string();
  j["gender"] = d.gender.entries();
  j["major"] = d.major.entries();
  j["department"] = d.department.entries();
  j["industry"] = d.industry.entries();
  j["position"] = d.position.entries();
  j["type"] = d.type.entries();
  j["fit_ids"] = std::vector<std::string>(fit_ids.begin(), fit_ids.end());
  out << j.dump() << '\n';
  return out.str();
}

LoadedDictionaries read_dictionaries_artifact(std::string_view text) {
  std::istringstream in{std::string(text)};
  LoadedDictionaries loaded;
  loaded.config_hash = artifact::read_header(in, "dictionaries", kFeatureArtifactVersion, "featurize").config_hash;
  const auto j = nlohmann::json::parse(in);
  loaded.reference_date = YearMonth::parse(j.at("reference_date").get<std::string>());
  auto load = [&](const char* name, CategoricalDictionary& dict) {
    for (const auto& v : j.at(name).get<std::vector<std::string>>()) dict.add(v);
  };
  load("gender", loaded.dictionaries.gender);
  load("major", loaded.dictionaries.major);
  load("department", loaded.dictionaries.department);
  load("industry", loaded.dictionaries.industry);
  load("position", loaded.dictionaries.position);
  load("type", loaded.dictionaries.type);
  loaded.fit_ids = j.at("fit_ids").get<std::vector<std::string>>();
  return loaded;
}

}  // namespace rjm
