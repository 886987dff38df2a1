#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rjm/clustering.hpp"
#include "rjm/corpus.hpp"
#include "rjm/embeddings.hpp"
#include "rjm/features.hpp"
#include "rjm/rng.hpp"
#include "rjm/synth.hpp"

namespace fixtures {

// The resume shown in the source table: only the current job is given there,
// the two earlier jobs are filled in.
inline const char* kShownResume = R"({
  "id": "558d...761", "major": "通信工程", "degree": 1, "_id": {"$oid": "x"},
  "gender": "男", "age": 31,
  "workExperienceList": [
    {"size": 3, "salary": 4, "end_date": "今", "start_date": "2014-8",
     "industry": "计算机/互联网", "position_name": "软件测试", "department": "硬件测试"},
    {"size": 2, "salary": 3, "end_date": "2011-6", "start_date": "2009-7",
     "industry": "通信/电子", "position_name": "技术支持", "department": "技术部", "type": "全职"},
    {"size": 3, "salary": 4, "end_date": "2014-7", "start_date": "2011-7",
     "industry": "计算机/互联网", "position_name": "软件测试", "department": "测试部"}
  ]
})";

inline rjm::WorkExperience job(std::string position, int salary, int size, rjm::YearMonth start,
                               rjm::YearMonth end, std::string industry = "计算机/互联网",
                               std::string department = "研发部") {
  rjm::WorkExperience e;
  e.position_name = std::move(position);
  e.department = std::move(department);
  e.industry = std::move(industry);
  e.salary = salary;
  e.size = size;
  e.start_date = start;
  e.end_date = end;
  e.quarter_count = rjm::whole_quarters(start, end);
  return e;
}

inline rjm::Resume person(std::string id, std::vector<rjm::WorkExperience> jobs, int degree = 1, int age = 30) {
  rjm::Resume r;
  r.id = std::move(id);
  r.major = "软件工程";
  r.gender = "女";
  r.degree = degree;
  r.age = age;
  r.experiences = std::move(jobs);
  return r;
}

inline std::vector<rjm::Resume> synthetic(std::size_t n, std::uint64_t seed) {
  rjm::SynthOptions o;
  o.count = n;
  o.seed = seed;
  return rjm::synthesize_resumes(o);
}

/// Small fitted artifacts for exercising featurization end to end.
inline rjm::FeatureArtifacts small_artifacts(std::span<const rjm::Resume> train) {
  rjm::FeatureArtifacts a;
  std::vector<rjm::PhraseSequence> seqs;
  std::vector<std::vector<std::string>> docs;
  for (const auto& r : train) {
    seqs.push_back(rjm::build_phrase_sequence(r));
    docs.push_back(seqs.back().tokens);
  }
  rjm::SkipGramParams sp;
  sp.epochs = 2;
  a.embeddings = rjm::train_skipgram(seqs, sp);
  std::vector<std::vector<double>> vecs;
  for (std::size_t i = 0; i < a.embeddings.size(); ++i) {
    const auto v = a.embeddings.vector(i);
    vecs.emplace_back(v.begin(), v.end());
  }
  rjm::KMeansParams kp;
  kp.restarts = 1;
  kp.k = 8;
  a.coarse_clusters = rjm::kmeans_fit(vecs, kp);
  kp.k = 16;
  a.fine_clusters = rjm::kmeans_fit(vecs, kp);
  rjm::LdaParams lp;
  lp.iterations = 20;
  lp.infer_iterations = 10;
  lp.topics = 4;
  a.small_topics = rjm::lda_fit(docs, lp);
  lp.topics = 8;
  a.large_topics = rjm::lda_fit(docs, lp);
  a.dictionaries = rjm::fit_dictionaries(train);
  a.reference_date = rjm::YearMonth{2016, 6};
  return a;
}

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace fixtures
