#include "rjm/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <sstream>

#include "rjm/artifact.hpp"
#include "rjm/error.hpp"
#include "rjm/rng.hpp"

namespace rjm {

std::string salary_token(int band) { return "salary_" + std::to_string(band); }
std::string size_token(int band) { return "size_" + std::to_string(band); }
std::string quarter_token(int quarters) { return "quarter_" + std::to_string(quarters); }
std::string age_token(int age) { return "age_" + std::to_string(age); }

std::array<std::string, kPhrasesPerExperience> experience_phrases(const WorkExperience& e) {
  return {e.department,        e.industry,         e.position_name,           salary_token(e.salary),
          size_token(e.size), e.experience_type, quarter_token(e.quarter_count)};
}

std::array<std::string, kPersonalPhrases> personal_phrases(const Resume& r) {
  return {age_token(r.age), r.major, r.gender};
}

PhraseSequence build_phrase_sequence(const Resume& resume, bool include_current) {
  PhraseSequence seq;
  std::size_t n = resume.experiences.size();
  if (!include_current && n > 0) --n;
  seq.tokens.reserve(n * kPhrasesPerExperience + kPersonalPhrases);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& t : experience_phrases(resume.experiences[i])) seq.tokens.push_back(std::move(t));
  }
  for (auto& t : personal_phrases(resume)) seq.tokens.push_back(std::move(t));
  return seq;
}

EmbeddingTable::EmbeddingTable(SkipGramParams params, std::vector<std::string> tokens,
                               std::vector<std::size_t> counts, std::vector<double> vectors)
    : params_(params), tokens_(std::move(tokens)), counts_(std::move(counts)), vectors_(std::move(vectors)) {
  if (counts_.size() != tokens_.size() || vectors_.size() != tokens_.size() * params_.dimension) {
    throw ShapeError("embedding table: inconsistent token/vector counts");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Gradient of the pair loss w.r.t. the score of one output vector:
// d/ds [-log s(s)] = s(s) - 1 for the positive, d/ds [-log s(-s)] = s(s) for negatives.
double score_gradient(double score, bool positive) { return sigmoid(score) - (positive ? 1.0 : 0.0); }

}  // namespace

double sgns_loss(std::span<const double> center, std::span<const double> context,
                 const std::vector<std::vector<double>>& negatives) {
  const std::size_t d = center.size();
  double loss = -std::log(sigmoid(dot(center.data(), context.data(), d)));
  for (const auto& neg : negatives) loss -= std::log(sigmoid(-dot(center.data(), neg.data(), d)));
  return loss;
}

SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> context,
                           const std::vector<std::vector<double>>& negatives) {
  const std::size_t d = center.size();
  SgnsGradient g;
  g.center.assign(d, 0.0);
  auto accumulate = [&](std::span<const double> out, bool positive) {
    const double gs = score_gradient(dot(center.data(), out.data(), d), positive);
    std::vector<double> go(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += gs * out[i];
      go[i] = gs * center[i];
    }
    return go;
  };
  g.context = accumulate(context, true);
  for (const auto& neg : negatives) g.negatives.push_back(accumulate(neg, false));
  return g;
}

EmbeddingTable train_skipgram(std::span<const PhraseSequence> sequences, const SkipGramParams& params) {
  if (params.dimension < 1) throw ConfigError("embedding dimension must be >= 1");
  if (params.window < 1) throw ConfigError("window must be >= 1");
  if (sequences.empty()) throw TrainingError("embedding corpus is empty");

  std::map<std::string, std::size_t> freq;
  for (const auto& s : sequences)
    for (const auto& t : s.tokens) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, c] : freq)
    if (c >= params.min_count) kept.emplace_back(tok, c);
  if (kept.empty()) throw TrainingError("vocabulary empty after min_count pruning");
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  const std::size_t vocab = kept.size();
  const std::size_t dim = params.dimension;
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab; ++i) {
    tokens.push_back(kept[i].first);
    counts.push_back(kept[i].second);
    index.emplace(kept[i].first, i);
  }

  Rng rng(params.seed);
  std::vector<double> input(vocab * dim);
  for (auto& x : input) x = (rng.uniform() - 0.5) / static_cast<double>(dim);
  std::vector<double> output(vocab * dim, 0.0);

  std::vector<std::vector<std::size_t>> encoded;
  std::size_t total = 0;
  for (const auto& s : sequences) {
    std::vector<std::size_t> ids;
    for (const auto& t : s.tokens) {
      auto it = index.find(t);
      if (it != index.end()) ids.push_back(it->second);
    }
    total += ids.size();
    encoded.push_back(std::move(ids));
  }

  std::vector<double> cumulative(vocab);
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab; ++i) {
    acc += std::pow(static_cast<double>(counts[i]), 0.75);
    cumulative[i] = acc;
  }
  auto draw_negative = [&] {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(vocab - 1, static_cast<std::size_t>(it - cumulative.begin()));
  };

  const double planned = static_cast<double>(params.epochs * total) + 1.0;
  std::size_t processed = 0;
  std::vector<double> center_update(dim);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& ids : encoded) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const double lr = params.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(processed) / planned);
        ++processed;
        const std::size_t reach = params.window - rng.below(params.window);
        const std::size_t lo = i >= reach ? i - reach : 0;
        const std::size_t hi = std::min(ids.size() - 1, i + reach);
        double* center = &input[ids[i] * dim];
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          std::fill(center_update.begin(), center_update.end(), 0.0);
          for (std::size_t k = 0; k <= params.negatives; ++k) {
            const bool positive = k == 0;
            const std::size_t target = positive ? ids[j] : draw_negative();
            if (!positive && target == ids[j]) continue;
            double* out = &output[target * dim];
            const double step = -lr * score_gradient(dot(center, out, dim), positive);
            for (std::size_t c = 0; c < dim; ++c) {
              center_update[c] += step * out[c];
              out[c] += step * center[c];
            }
          }
          for (std::size_t c = 0; c < dim; ++c) center[c] += center_update[c];
        }
      }
    }
  }
  for (double x : input) {
    if (!std::isfinite(x)) throw TrainingError("embedding training diverged (non-finite weight)");
  }
  return EmbeddingTable(params, std::move(tokens), std::move(counts), std::move(input));
}

std::vector<double> embed(const EmbeddingTable& table, std::string_view token, EmbedStats* stats) {
  if (stats) ++stats->lookups;
  if (auto idx = table.index_of(token)) {
    auto v = table.vector(*idx);
    return {v.begin(), v.end()};
  }
  if (stats) ++stats->out_of_vocab;
  return std::vector<double>(table.dimension(), 0.0);
}

std::vector<double> embed_phrase(const EmbeddingTable& table, std::span<const std::string> words, EmbedStats* stats) {
  std::vector<double> mean(table.dimension(), 0.0);
  if (words.empty()) return mean;
  for (const auto& w : words) {
    const auto v = embed(table, w, stats);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  for (auto& x : mean) x /= static_cast<double>(words.size());
  return mean;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

std::vector<std::pair<std::string, double>> most_similar(const EmbeddingTable& table, std::string_view token,
                                                         std::size_t k) {
  if (k < 1) throw ArgumentError("most_similar: k must be >= 1");
  const auto query = table.index_of(token);
  if (!query) throw LookupError("most_similar: '" + std::string(token) + "' is not in the vocabulary");
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == *query) continue;
    scored.emplace_back(cosine(table.vector(*query), table.vector(i)), i);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < take; ++i) out.emplace_back(table.tokens()[scored[i].second], scored[i].first);
  return out;
}

std::string write_embedding_artifact(const EmbeddingTable& table, std::string_view config_hash,
                                     std::span<const std::string> fit_ids) {
  std::ostringstream out;
  artifact::write_header(out, {"embeddings", kEmbeddingArtifactVersion, std::string(config_hash)});
  const auto& p = table.params();
  out << "dim " << p.dimension << " vocab " << table.size() << " window " << p.window << " negatives "
      << p.negatives << " epochs " << p.epochs << " min_count " << p.min_count << " seed " << p.seed << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p.learning_rate);
  out << "learning_rate " << buf << '\n';
  out << "fit_ids " << fit_ids.size();
  for (const auto& id : fit_ids) out << ' ' << id;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i] << '\t' << table.count(i) << '\t';
    const auto v = table.vector(i);
    for (std::size_t c = 0; c < v.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", v[c]);
      out << (c ? " " : "") << buf;
    }
    out << '\n';
  }
  return out.str();
}

LoadedEmbeddings read_embedding_artifact(std::string_view text) {
  std::istringstream in{std::string(text)};
  LoadedEmbeddings loaded;
  loaded.config_hash = artifact::read_header(in, "embeddings", kEmbeddingArtifactVersion, "embed").config_hash;
  SkipGramParams p;
  std::string key;
  std::size_t vocab = 0;
  in >> key >> p.dimension >> key >> vocab >> key >> p.window >> key >> p.negatives >> key >> p.epochs >> key >>
      p.min_count >> key >> p.seed;
  in >> key >> p.learning_rate;
  std::size_t n_ids = 0;
  in >> key >> n_ids;
  if (!in || key != "fit_ids") throw StaleArtifactError("embed", "embedding artifact: malformed preamble");
  loaded.fit_ids.resize(n_ids);
  for (auto& id : loaded.fit_ids) in >> id;
  in.ignore(1);
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  std::vector<double> vectors;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw StaleArtifactError("embed", "malformed vector row");
    tokens.push_back(line.substr(0, t1));
    counts.push_back(std::stoull(line.substr(t1 + 1, t2 - t1 - 1)));
    std::istringstream vs(line.substr(t2 + 1));
    for (std::size_t c = 0; c < p.dimension; ++c) {
      double x = 0.0;
      if (!(vs >> x)) throw StaleArtifactError("embed", "short vector row for '" + tokens.back() + "'");
      vectors.push_back(x);
    }
  }
  if (tokens.size() != vocab) throw StaleArtifactError("embed", "embedding artifact: vocab size mismatch");
  loaded.table = EmbeddingTable(p, std::move(tokens), std::move(counts), std::move(vectors));
  return loaded;
}

}  // namespace rjm
