#include <algorithm>
#include <json.hpp>
#include <map>
#include <sstream>

#include "rjm/artifact.hpp"
#include "rjm/clustering.hpp"
#include "rjm/error.hpp"
#include "rjm/rng.hpp"

namespace rjm {

namespace {

LdaParams resolved(LdaParams p) {
  if (p.topics < 2) throw ConfigError("LDA: topics must be >= 2");
  if (p.alpha <= 0.0) p.alpha = 50.0 / static_cast<double>(p.topics);
  if (p.beta <= 0.0) throw ConfigError("LDA: beta must be positive");
  return p;
}

std::size_t sample(Rng& rng, const std::vector<double>& weights, double total) {
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return weights.size() - 1;
}

constexpr std::uint64_t kFoldInStream = 0xF01D;

}  // namespace

LdaModel::LdaModel(LdaParams params, std::vector<std::string> vocab, std::vector<std::int64_t> topic_word)
    : params_(resolved(params)), vocab_(std::move(vocab)), topic_word_(std::move(topic_word)) {
  if (topic_word_.size() != params_.topics * vocab_.size()) throw ShapeError("LDA: topic-word matrix shape");
  topic_totals_.assign(params_.topics, 0);
  for (std::size_t k = 0; k < params_.topics; ++k)
    for (std::size_t w = 0; w < vocab_.size(); ++w) topic_totals_[k] += topic_word_[k * vocab_.size() + w];
  for (std::size_t w = 0; w < vocab_.size(); ++w) index_.emplace(vocab_[w], w);
}

long LdaModel::word_index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::vector<double> LdaModel::topic_word_distribution(std::size_t topic) const {
  const double v = static_cast<double>(vocab_.size());
  std::vector<double> phi(vocab_.size());
  const double denom = static_cast<double>(topic_totals_[topic]) + v * params_.beta;
  for (std::size_t w = 0; w < vocab_.size(); ++w) phi[w] = (static_cast<double>(topic_word_count(topic, w)) + params_.beta) / denom;
  return phi;
}

std::vector<double> LdaModel::training_doc_distribution(std::size_t doc) const {
  const auto& counts = doc_topic.at(doc);
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  const double denom = n + static_cast<double>(params_.topics) * params_.alpha;
  std::vector<double> theta(params_.topics);
  for (std::size_t k = 0; k < params_.topics; ++k) theta[k] = (static_cast<double>(counts[k]) + params_.alpha) / denom;
  return theta;
}

std::vector<double> LdaModel::infer(std::span<const std::string> doc) const {
  std::vector<std::size_t> words;
  for (const auto& t : doc) {
    const long w = word_index(t);
    if (w >= 0) words.push_back(static_cast<std::size_t>(w));
  }
  if (words.empty()) return {};

  const std::size_t K = params_.topics;
  const double vbeta = static_cast<double>(vocab_.size()) * params_.beta;
  Rng rng(derive_seed(params_.seed, kFoldInStream));
  std::vector<std::uint32_t> z(words.size());
  std::vector<double> n_dk(K, 0.0);
  for (auto& zi : z) {
    zi = static_cast<std::uint32_t>(rng.below(K));
    n_dk[zi] += 1.0;
  }
  std::vector<double> weights(K);
  std::vector<double> theta_sum(K, 0.0);
  const std::size_t sweeps = std::max<std::size_t>(1, params_.infer_iterations);
  const std::size_t burn_in = sweeps / 2;
  std::size_t kept = 0;
  const double denom = static_cast<double>(words.size()) + static_cast<double>(K) * params_.alpha;
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      n_dk[z[i]] -= 1.0;
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double phi = (static_cast<double>(topic_word_count(k, words[i])) + params_.beta) /
                           (static_cast<double>(topic_totals_[k]) + vbeta);
        weights[k] = (n_dk[k] + params_.alpha) * phi;
        total += weights[k];
      }
      z[i] = static_cast<std::uint32_t>(sample(rng, weights, total));
      n_dk[z[i]] += 1.0;
    }
    if (s >= burn_in) {
      for (std::size_t k = 0; k < K; ++k) theta_sum[k] += (n_dk[k] + params_.alpha) / denom;
      ++kept;
    }
  }
  double norm = 0.0;
  for (auto& t : theta_sum) {
    t /= static_cast<double>(kept);
    norm += t;
  }
  for (auto& t : theta_sum) t /= norm;
  return theta_sum;
}

LdaModel lda_fit(std::span<const std::vector<std::string>> docs, const LdaParams& raw) {
  const LdaParams params = resolved(raw);
  if (docs.empty()) throw TrainingError("LDA: empty corpus");
  std::map<std::string, std::size_t> vocab_map;
  for (const auto& d : docs)
    for (const auto& t : d) vocab_map.emplace(t, 0);
  if (vocab_map.empty()) throw TrainingError("LDA: all documents are empty");
  std::vector<std::string> vocab;
  for (auto& [tok, id] : vocab_map) {
    id = vocab.size();
    vocab.push_back(tok);
  }

  const std::size_t K = params.topics;
  const std::size_t V = vocab.size();
  LdaModel model(params, vocab, std::vector<std::int64_t>(K * V, 0));
  model.doc_words.resize(docs.size());
  model.assignments.resize(docs.size());
  model.doc_topic.assign(docs.size(), std::vector<std::int64_t>(K, 0));

  Rng rng(params.seed);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& t : docs[d]) {
      const std::size_t w = vocab_map.at(t);
      const auto k = static_cast<std::uint32_t>(rng.below(K));
      model.doc_words[d].push_back(static_cast<std::uint32_t>(w));
      model.assignments[d].push_back(k);
      ++model.doc_topic[d][k];
      ++model.topic_word_[k * V + w];
      ++model.topic_totals_[k];
    }
  }

  const double vbeta = static_cast<double>(V) * params.beta;
  std::vector<double> weights(K);
  for (std::size_t it = 0; it < params.iterations; ++it) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto& words = model.doc_words[d];
      auto& z = model.assignments[d];
      auto& n_dk = model.doc_topic[d];
      for (std::size_t i = 0; i < words.size(); ++i) {
        const std::size_t w = words[i];
        std::size_t k = z[i];
        --n_dk[k];
        --model.topic_word_[k * V + w];
        --model.topic_totals_[k];
        double total = 0.0;
        for (std::size_t t = 0; t < K; ++t) {
          weights[t] = (static_cast<double>(n_dk[t]) + params.alpha) *
                       (static_cast<double>(model.topic_word_[t * V + w]) + params.beta) /
                       (static_cast<double>(model.topic_totals_[t]) + vbeta);
          total += weights[t];
        }
        k = sample(rng, weights, total);
        z[i] = static_cast<std::uint32_t>(k);
        ++n_dk[k];
        ++model.topic_word_[k * V + w];
        ++model.topic_totals_[k];
      }
    }
  }
  return model;
}

std::size_t lda_dominant_topic(const LdaModel& model, std::span<const std::string> doc, bool* unknown) {
  const auto theta = model.infer(doc);
  if (unknown) *unknown = theta.empty();
  if (theta.empty()) return model.unknown_topic();
  return static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
}

std::string write_lda_artifact(const LdaModel& model, std::string_view config_hash,
                               std::span<const std::string> fit_ids) {
  std::ostringstream out;
  artifact::write_header(out, {"lda", kClusterArtifactVersion, std::string(config_hash)});
  nlohmann::json j;
  const auto& p = model.params();
  j["topics"] = p.topics;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["iterations"] = p.iterations;
  j["seed"] = p.seed;
  j["infer_iterations"] = p.infer_iterations;
  j["vocab"] = model.vocab();
  std::vector<std::int64_t> counts;
  counts.reserve(p.topics * model.vocab_size());
  for (std::size_t k = 0; k < p.topics; ++k)
    for (std::size_t w = 0; w < model.vocab_size(); ++w) counts.push_back(model.topic_word_count(k, w));
  j["topic_word"] = counts;
  j["fit_ids"] = std::vector<std::string>(fit_ids.begin(), fit_ids.end());
  out << j.dump() << '\n';
  return out.str();
}

LdaModel read_lda_artifact(std::string_view text, std::string* config_hash, std::vector<std::string>* fit_ids) {
  std::istringstream in{std::string(text)};
  const auto header = artifact::read_header(in, "lda", kClusterArtifactVersion, "cluster");
  if (config_hash) *config_hash = header.config_hash;
  const auto j = nlohmann::json::parse(in);
  LdaParams p;
  p.topics = j.at("topics").get<std::size_t>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.iterations = j.at("iterations").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.infer_iterations = j.at("infer_iterations").get<std::size_t>();
  if (fit_ids) *fit_ids = j.value("fit_ids", std::vector<std::string>{});
  return LdaModel(p, j.at("vocab").get<std::vector<std::string>>(), j.at("topic_word").get<std::vector<std::int64_t>>());
}

}  // namespace rjm
