#include <algorithm>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "rjm/artifact.hpp"
#include "rjm/clustering.hpp"
#include "rjm/error.hpp"
#include "rjm/rng.hpp"

namespace rjm {

KMeansModel::KMeansModel(std::size_t dimension, std::vector<double> centroids)
    : dimension_(dimension), centroids_(std::move(centroids)) {
  if (dimension_ == 0 || centroids_.size() % dimension_ != 0) throw ShapeError("k-means: ragged centroid buffer");
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::vector<double>> distinct_points(std::span<const std::vector<double>> vectors) {
  std::vector<std::vector<double>> sorted(vectors.begin(), vectors.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return sorted;
}

// Number of k-subsets of n items, saturating at `cap`.
std::size_t choose_capped(std::size_t n, std::size_t k, std::size_t cap) {
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(c + 0.5);
}

constexpr std::size_t kExhaustiveSeedings = 256;

struct Run {
  std::vector<double> centroids;
  std::vector<double> history;
  std::size_t iterations = 0;
  double inertia = 0.0;
};

// Single-point moves from a Lloyd fixed point. Moving x from cluster a to b
// changes the inertia by n_b/(n_b+1) |x - m_b|^2 - n_a/(n_a-1) |x - m_a|^2;
// any negative change is taken, so the result is never worse. Returns true if
// anything moved; `centroids` are then the means of the refined partition.
bool hartigan_refine(std::span<const std::vector<double>> points, std::size_t k, std::size_t dim,
                     std::vector<std::size_t>& label, std::vector<double>& centroids) {
  const std::size_t n = points.size();
  std::vector<double> sums(k * dim, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++counts[label[i]];
    for (std::size_t j = 0; j < dim; ++j) sums[label[i] * dim + j] += points[i][j];
  }
  auto dist_to_mean = [&](std::size_t i, std::size_t c) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = points[i][j] - sums[c * dim + j] / static_cast<double>(counts[c]);
      s += d * d;
    }
    return s;
  };
  bool any = false;
  for (std::size_t pass = 0; pass < 100; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = label[i];
      if (counts[a] < 2) continue;
      const double na = static_cast<double>(counts[a]);
      const double leave = na / (na - 1.0) * dist_to_mean(i, a);
      std::size_t target = a;
      double best = -1e-12 * std::max(1.0, leave);
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a || counts[b] == 0) continue;
        const double nb = static_cast<double>(counts[b]);
        const double delta = nb / (nb + 1.0) * dist_to_mean(i, b) - leave;
        if (delta < best) {
          best = delta;
          target = b;
        }
      }
      if (target == a) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        sums[a * dim + j] -= points[i][j];
        sums[target * dim + j] += points[i][j];
      }
      --counts[a];
      ++counts[target];
      label[i] = target;
      moved = any = true;
    }
    if (!moved) break;
  }
  if (any) {
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < dim; ++j) centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
  }
  return any;
}

std::vector<double> plus_plus_seeds(std::span<const std::vector<double>> points, std::size_t k, std::size_t dim,
                                    Rng& rng) {
  const std::size_t n = points.size();
  std::vector<double> seeds(k * dim);
  auto centroid = [&](std::size_t c) { return std::span<double>(seeds.data() + c * dim, dim); };
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(n);
  std::copy(points[first].begin(), points[first].end(), centroid(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centroid(c - 1)));
      total += nearest[i];
    }
    std::size_t chosen = n - 1;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      if (u < nearest[i]) {
        chosen = i;
        break;
      }
      u -= nearest[i];
    }
    // Guard against rounding landing on an already chosen point.
    if (nearest[chosen] <= 0.0) {
      chosen = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    }
    std::copy(points[chosen].begin(), points[chosen].end(), centroid(c).begin());
  }
  return seeds;
}

Run lloyd(std::span<const std::vector<double>> points, std::size_t k, std::size_t dim, std::vector<double> seeds,
          const KMeansParams& params) {
  const std::size_t n = points.size();
  Run run;
  run.centroids = std::move(seeds);
  auto centroid = [&](std::size_t c) { return std::span<double>(run.centroids.data() + c * dim, dim); };

  std::vector<std::size_t> label(n, 0);
  std::vector<double> dist(n, 0.0);
  auto assign_all = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], centroid(c));
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      label[i] = arg;
      dist[i] = best;
      inertia += best;
    }
    return inertia;
  };

  for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
    run.history.push_back(assign_all());
    run.iterations = iter + 1;
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[label[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[label[i] * dim + j] += points[i][j];
    }
    double shift = 0.0;
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> next(dim);
      if (counts[c] == 0) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i] && dist[i] > far_d) {
            far_d = dist[i];
            far = i;
          }
        }
        taken[far] = true;
        dist[far] = 0.0;
        next.assign(points[far].begin(), points[far].end());
      } else {
        for (std::size_t j = 0; j < dim; ++j) next[j] = sums[c * dim + j] / static_cast<double>(counts[c]);
      }
      shift = std::max(shift, squared_distance(next, centroid(c)));
      std::copy(next.begin(), next.end(), centroid(c).begin());
    }
    if (shift <= params.tol * params.tol) break;
  }
  run.inertia = assign_all();
  if (hartigan_refine(points, k, dim, label, run.centroids)) {
    run.inertia = assign_all();
    run.history.push_back(run.inertia);
  }
  return run;
}

}  // namespace

KMeansModel kmeans_fit(std::span<const std::vector<double>> vectors, const KMeansParams& params) {
  if (params.k < 1) throw ConfigError("k-means: k must be >= 1");
  if (vectors.empty()) throw ConfigError("k-means: no input vectors");
  const std::size_t dim = vectors.front().size();
  if (dim == 0) throw ShapeError("k-means: zero-dimensional vectors");
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ShapeError("k-means: vectors of differing dimension");
  }
  const auto distinct = distinct_points(vectors);
  if (params.k > distinct.size()) {
    throw ConfigError("k-means: k=" + std::to_string(params.k) + " exceeds " + std::to_string(distinct.size()) +
                      " distinct vectors");
  }
  Run best;
  bool have = false;
  auto consider = [&](Run run) {
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  };
  if (choose_capped(distinct.size(), params.k, kExhaustiveSeedings) <= kExhaustiveSeedings) {
    // Few enough distinct points to start from every k-subset of them.
    std::vector<std::size_t> pick(params.k);
    for (std::size_t i = 0; i < params.k; ++i) pick[i] = i;
    for (;;) {
      std::vector<double> seeds;
      for (std::size_t i : pick) seeds.insert(seeds.end(), distinct[i].begin(), distinct[i].end());
      consider(lloyd(vectors, params.k, dim, std::move(seeds), params));
      std::size_t i = params.k;
      while (i > 0 && pick[i - 1] == distinct.size() - params.k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < params.k; ++j) pick[j] = pick[j - 1] + 1;
    }
  } else {
    for (std::size_t r = 0; r < std::max<std::size_t>(1, params.restarts); ++r) {
      Rng rng(derive_seed(params.seed, r));
      consider(lloyd(vectors, params.k, dim, plus_plus_seeds(vectors, params.k, dim, rng), params));
    }
  }
  KMeansModel model(dim, std::move(best.centroids));
  model.seed = params.seed;
  model.iterations = best.iterations;
  model.inertia = best.inertia;
  model.inertia_history = std::move(best.history);
  return model;
}

std::size_t kmeans_assign(const KMeansModel& model, std::span<const double> v) {
  if (v.size() != model.dimension()) {
    throw ShapeError("k-means: vector of dimension " + std::to_string(v.size()) + ", model expects " +
                     std::to_string(model.dimension()));
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < model.k(); ++c) {
    const double d = squared_distance(v, model.centroid(c));
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

double kmeans_inertia(const KMeansModel& model, std::span<const std::vector<double>> vectors) {
  double total = 0.0;
  for (const auto& v : vectors) total += squared_distance(v, model.centroid(kmeans_assign(model, v)));
  return total;
}

std::string write_kmeans_artifact(const KMeansModel& model, std::string_view config_hash) {
  std::ostringstream out;
  artifact::write_header(out, {"kmeans", kClusterArtifactVersion, std::string(config_hash)});
  nlohmann::json j;
  j["k"] = model.k();
  j["dimension"] = model.dimension();
  j["seed"] = model.seed;
  j["iterations"] = model.iterations;
  j["inertia"] = model.inertia;
  j["centroids"] = model.centroids();
  out << j.dump() << '\n';
  return out.str();
}

KMeansModel read_kmeans_artifact(std::string_view text, std::string* config_hash) {
  std::istringstream in{std::string(text)};
  const auto header = artifact::read_header(in, "kmeans", kClusterArtifactVersion, "cluster");
  if (config_hash) *config_hash = header.config_hash;
  const auto j = nlohmann::json::parse(in);
  KMeansModel model(j.at("dimension").get<std::size_t>(), j.at("centroids").get<std::vector<double>>());
  model.seed = j.at("seed").get<std::uint64_t>();
  model.iterations = j.at("iterations").get<std::size_t>();
  model.inertia = j.at("inertia").get<double>();
  if (model.k() != j.at("k").get<std::size_t>()) throw StaleArtifactError("cluster", "k-means artifact: k mismatch");
  return model;
}

}  // namespace rjm
