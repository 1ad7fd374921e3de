#include "termweight/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"
#include "termweight/parallel.hpp"

namespace termweight {
namespace {

constexpr std::size_t kRowChunk = 2048;

struct Assignment {
  std::vector<std::uint32_t> labels;
  std::vector<double> dist2;  // squared Euclidean distance (no 1/D factor)
  double inertia = 0.0;       // weighted, with the 1/D factor
};

double uniform(std::mt19937_64& rng, double hi) { return std::uniform_real_distribution<double>(0.0, hi)(rng); }

// Row whose cumulative weight first exceeds u; falls back to the last row with
// positive weight when rounding leaves u past the end.
std::size_t pick_row(std::span<const double> weights, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

void assign(const PointMatrix& points, std::span<const double> centroids, std::size_t k, Assignment& out) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.dimension;
  out.labels.resize(n);
  out.dist2.resize(n);
  std::vector<double> partial(chunk_count(n, kRowChunk), 0.0);
  parallel_chunks(n, kRowChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    double local = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      auto row = points.row(i);
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(row, centroids.subspan(c * dim, dim));
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      out.labels[i] = best;
      out.dist2[i] = best_d;
      local += points.weights[i] * best_d;
    }
    partial[chunk] = local;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  out.inertia = total / static_cast<double>(dim);
}

std::vector<double> kmeans_plus_plus(const PointMatrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.dimension;
  std::vector<double> centroids;
  centroids.reserve(k * dim);

  auto first = points.row(pick_row(points.weights, uniform(rng, points.total_weight())));
  centroids.insert(centroids.end(), first.begin(), first.end());

  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  std::vector<double> score(n);
  for (std::size_t c = 1; c < k; ++c) {
    auto latest = std::span<const double>(centroids).subspan((c - 1) * dim, dim);
    std::vector<double> partial(chunk_count(n, kRowChunk), 0.0);
    parallel_chunks(n, kRowChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
      double local = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        closest[i] = std::min(closest[i], squared_distance(points.row(i), latest));
        score[i] = points.weights[i] * closest[i];
        local += score[i];
      }
      partial[chunk] = local;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    const std::size_t chosen = total > 0.0 ? pick_row(score, uniform(rng, total))
                                           : pick_row(points.weights, uniform(rng, points.total_weight()));
    auto row = points.row(chosen);
    centroids.insert(centroids.end(), row.begin(), row.end());
  }
  return centroids;
}

// Weighted means of members; returns the member weight of each cluster.
std::vector<double> update_centroids(const PointMatrix& points, const Assignment& assignment, std::size_t k,
                                     std::vector<double>& centroids) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.dimension;
  const std::size_t chunks = chunk_count(n, kRowChunk);
  std::vector<double> sums(chunks * k * dim, 0.0);
  std::vector<double> mass(chunks * k, 0.0);
  parallel_chunks(n, kRowChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    double* s = sums.data() + chunk * k * dim;
    double* m = mass.data() + chunk * k;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t c = assignment.labels[i];
      const double w = points.weights[i];
      auto row = points.row(i);
      m[c] += w;
      for (std::size_t j = 0; j < dim; ++j) s[c * dim + j] += w * row[j];
    }
  });
  std::vector<double> total_sum(k * dim, 0.0);
  std::vector<double> total_mass(k, 0.0);
  for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
    for (std::size_t x = 0; x < k * dim; ++x) total_sum[x] += sums[chunk * k * dim + x];
    for (std::size_t c = 0; c < k; ++c) total_mass[c] += mass[chunk * k + c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (total_mass[c] <= 0.0) continue;
    double* centroid = centroids.data() + c * dim;
    for (std::size_t j = 0; j < dim; ++j) centroid[j] = total_sum[c * dim + j] / total_mass[c];
    for (std::size_t j = 1; j < dim; ++j) centroid[j] = std::max(centroid[j], centroid[j - 1]);
    if (points.normalized)
      for (std::size_t j = 0; j < dim; ++j) centroid[j] = std::min(1.0, std::max(0.0, centroid[j]));
  }
  return total_mass;
}

void reseed_empty(const PointMatrix& points, const Assignment& assignment, std::span<const double> mass,
                  std::vector<double>& centroids) {
  const std::size_t dim = points.dimension;
  std::vector<std::size_t> empty;
  for (std::size_t c = 0; c < mass.size(); ++c)
    if (mass[c] <= 0.0) empty.push_back(c);
  if (empty.empty()) return;

  std::vector<double> far(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i)
    far[i] = squared_distance(points.row(i), std::span<const double>(centroids).subspan(assignment.labels[i] * dim, dim));
  for (std::size_t c : empty) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < far.size(); ++i) {
      if (far[i] > best_d) {
        best_d = far[i];
        best = i;
      }
    }
    auto row = points.row(best);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    far[best] = -0.5;  // not reused for another empty cluster while others remain
  }
}

ClusterModel fit_once(const PointMatrix& points, const KMeansConfig& config, std::uint64_t seed) {
  const std::size_t k = config.k;
  std::mt19937_64 rng(seed);
  ClusterModel model;
  model.position = PositionConfig{points.dimension, points.normalized};
  model.kmeans = config;
  model.centroids = kmeans_plus_plus(points, k, rng);

  Assignment assignment;
  assign(points, model.centroids, k, assignment);
  model.inertia_history.push_back(assignment.inertia);
  double previous = assignment.inertia;

  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    auto mass = update_centroids(points, assignment, k, model.centroids);
    reseed_empty(points, assignment, mass, model.centroids);
    assign(points, model.centroids, k, assignment);
    const double current = assignment.inertia;
    if (!std::isfinite(current)) throw NumericError("k-means inertia is not finite");
    if (current - previous > 1e-9 * std::max(1.0, previous))
      throw NumericError("k-means inertia increased from " + format_double(previous) + " to " +
                         format_double(current));
    model.inertia_history.push_back(current);
    model.iterations = iter + 1;
    const bool converged = previous <= 0.0 || (previous - current) / previous < config.rel_tol;
    previous = current;
    if (converged) break;
  }

  model.inertia = assignment.inertia;
  model.counts.assign(k, 0.0);
  for (std::size_t i = 0; i < points.rows(); ++i) model.counts[assignment.labels[i]] += points.weights[i];
  return model;
}

}  // namespace

double PointMatrix::total_weight() const {
  double total = 0.0;
  for (double w : weights) total += w;
  return total;
}

void PointMatrix::append(std::span<const double> row, double weight) {
  if (row.size() != dimension) throw ConfigError("point dimension mismatch");
  values.insert(values.end(), row.begin(), row.end());
  weights.push_back(weight);
}

PointMatrix PointMatrix::from_vectors(std::span<const QuantileVector> points) {
  PointMatrix m;
  if (points.empty()) return m;
  m.dimension = points.front().dimension();
  m.normalized = points.front().normalized();
  for (const auto& p : points) {
    if (p.normalized() != m.normalized) throw ConfigError("points differ in position domain");
    m.append(p.values());
  }
  return m;
}

PointMatrix collect_points(const PositionalIndex& index, const PositionConfig& config, std::size_t sample_cap,
                           std::uint64_t seed) {
  const std::size_t total = index.num_postings();
  std::vector<std::size_t> selected(total);
  std::iota(selected.begin(), selected.end(), std::size_t{0});
  if (sample_cap > 0 && total > sample_cap) {
    std::vector<std::size_t> sample;
    sample.reserve(sample_cap);
    std::mt19937_64 rng(seed);
    std::sample(selected.begin(), selected.end(), std::back_inserter(sample), sample_cap, rng);
    selected = std::move(sample);
  }

  // Posting -> (term, doc) without materializing the postings table.
  std::vector<TermId> owner(total);
  for (TermId t = 0; t < index.num_terms(); ++t) {
    const std::size_t begin = index.posting_begin(t);
    std::fill(owner.begin() + static_cast<std::ptrdiff_t>(begin),
              owner.begin() + static_cast<std::ptrdiff_t>(begin + index.df(t)), t);
  }

  PointMatrix points;
  points.dimension = config.dimension;
  points.normalized = config.normalize;
  std::unordered_multimap<std::uint64_t, std::size_t> seen;
  const std::size_t dim = config.dimension;
  constexpr std::size_t kBatch = 8192;
  std::vector<double> buffer;
  for (std::size_t start = 0; start < selected.size(); start += kBatch) {
    const std::size_t count = std::min(kBatch, selected.size() - start);
    buffer.resize(count * dim);
    parallel_chunks(count, 512, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t g = selected[start + i];
        const TermId t = owner[g];
        const Posting& p = index.postings(t)[g - index.posting_begin(t)];
        quantize_positions_into(index.positions(p), index.doc_length(p.doc), config,
                                std::span<double>(buffer).subspan(i * dim, dim));
      }
    });
    for (std::size_t i = 0; i < count; ++i) {
      std::span<const double> row(buffer.data() + i * dim, dim);
      const std::string_view bytes(reinterpret_cast<const char*>(row.data()), dim * sizeof(double));
      const std::uint64_t h = fnv1a64(bytes);
      bool merged = false;
      auto [lo, hi] = seen.equal_range(h);
      for (auto it = lo; it != hi; ++it) {
        if (std::memcmp(points.values.data() + it->second * dim, row.data(), dim * sizeof(double)) == 0) {
          points.weights[it->second] += 1.0;
          merged = true;
          break;
        }
      }
      if (!merged) {
        seen.emplace(h, points.rows());
        points.append(row);
      }
    }
  }
  return points;
}

void to_json(nlohmann::json& j, const KMeansConfig& config) {
  j = nlohmann::json{{"k", config.k},           {"max_iter", config.max_iter},     {"rel_tol", config.rel_tol},
                     {"n_init", config.n_init}, {"sample_cap", config.sample_cap}, {"seed", config.seed}};
}

void from_json(const nlohmann::json& j, KMeansConfig& config) {
  config = KMeansConfig{};
  if (j.contains("k")) config.k = j.at("k").get<std::size_t>();
  if (j.contains("max_iter")) config.max_iter = j.at("max_iter").get<std::size_t>();
  if (j.contains("rel_tol")) config.rel_tol = j.at("rel_tol").get<double>();
  if (j.contains("n_init")) config.n_init = j.at("n_init").get<std::size_t>();
  if (j.contains("sample_cap")) config.sample_cap = j.at("sample_cap").get<std::size_t>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (config.k == 0) throw ConfigError("k must be >= 1");
  if (config.n_init == 0) throw ConfigError("n_init must be >= 1");
}

QuantileVector ClusterModel::centroid_vector(std::size_t i) const {
  auto c = centroid(i);
  return QuantileVector(std::vector<double>(c.begin(), c.end()), position.normalize);
}

ClusterModel fit_kmeans(const PointMatrix& points, const KMeansConfig& config) {
  if (config.k == 0) throw ConfigError("k must be >= 1");
  if (points.rows() == 0 || points.total_weight() < static_cast<double>(config.k))
    throw DataError("k-means needs at least k points (k=" + std::to_string(config.k) + ")");
  ClusterModel best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, config.n_init); ++r) {
    ClusterModel model = fit_once(points, config, derive_seed(config.seed, r));
    if (r == 0 || model.inertia < best.inertia) best = std::move(model);
  }
  return best;
}

ClusterModel fit_kmeans(std::span<const QuantileVector> points, const KMeansConfig& config) {
  return fit_kmeans(PointMatrix::from_vectors(points), config);
}

std::size_t nearest_centroid(std::span<const double> point, const ClusterModel& model, double metric_scale) {
  if (point.size() != model.position.dimension) throw ConfigError("point dimension does not match model");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.k(); ++c) {
    const double d = metric_scale * std::sqrt(squared_distance(point, model.centroid(c)) /
                                              static_cast<double>(model.position.dimension));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void represent_term_doc_into(std::span<const double> p_td, const ClusterModel& model, std::span<double> out) {
  const std::size_t dim = model.position.dimension;
  if (p_td.size() != dim) throw ConfigError("quantile vector dimension does not match cluster model");
  for (std::size_t c = 0; c < model.k(); ++c)
    out[c] = std::sqrt(squared_distance(p_td, model.centroid(c)) / static_cast<double>(dim));
}

std::vector<double> represent_term_doc(const QuantileVector& p_td, const ClusterModel& model) {
  if (p_td.normalized() != model.position.normalize)
    throw ConfigError("quantile vector domain does not match cluster model");
  std::vector<double> out(model.k());
  represent_term_doc_into(p_td.values(), model, out);
  return out;
}

std::string to_string(Aggregation mode) { return mode == Aggregation::Sum ? "sum" : "mean"; }

Aggregation aggregation_from_string(std::string_view name) {
  if (name == "sum") return Aggregation::Sum;
  if (name == "mean") return Aggregation::Mean;
  throw ConfigError("unknown aggregation mode '" + std::string(name) + "'");
}

std::vector<double> represent_term_collection(std::string_view term, const PositionalIndex& index,
                                              const ClusterModel& model, Aggregation mode) {
  auto id = index.find_term(term);
  if (!id) throw LookupError("term '" + std::string(term) + "' does not occur in the collection");
  std::vector<double> total(model.k(), 0.0);
  std::vector<double> p(model.position.dimension);
  std::vector<double> x(model.k());
  for (const auto& posting : index.postings(*id)) {
    quantize_positions_into(index.positions(posting), index.doc_length(posting.doc), model.position, p);
    represent_term_doc_into(p, model, x);
    for (std::size_t c = 0; c < model.k(); ++c) total[c] += x[c];
  }
  if (mode == Aggregation::Mean)
    for (double& v : total) v /= static_cast<double>(index.df(*id));
  return total;
}

std::string export_clusters(const ClusterModel& model) {
  std::string out = "cluster,count";
  for (std::size_t j = 1; j <= model.position.dimension; ++j) out += ",q" + std::to_string(j);
  out += "\n";
  for (std::size_t c = 0; c < model.k(); ++c) {
    out += std::to_string(c) + "," + format_double(model.counts[c]);
    for (double v : model.centroid(c)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string serialize_cluster_model(const ClusterModel& model, const std::string& config_hash) {
  nlohmann::json header = {
      {"format", "termweight-clusters"},
      {"version", 1},
      {"config_hash", config_hash},
      {"k", model.k()},
      {"dimension", model.position.dimension},
      {"normalize", model.position.normalize},
      {"kmeans", model.kmeans},
      {"seed", model.kmeans.seed},
      {"sample_cap", model.kmeans.sample_cap},
      {"inertia", model.inertia},
      {"iterations", model.iterations},
      {"counts", model.counts},
      {"inertia_history", model.inertia_history},
  };
  ByteWriter payload;
  payload.f64s(model.centroids);
  return pack_header_file(header, payload.bytes());
}

ClusterModel parse_cluster_model(std::string_view bytes, std::string* config_hash) {
  auto [header, payload] = unpack_header_file(bytes);
  ClusterModel model;
  try {
    if (header.at("format") != "termweight-clusters") throw DataError("not a cluster model file");
    model.kmeans = header.at("kmeans").get<KMeansConfig>();
    model.position.dimension = header.at("dimension").get<std::size_t>();
    model.position.normalize = header.at("normalize").get<bool>();
    model.inertia = header.at("inertia").get<double>();
    model.iterations = header.at("iterations").get<std::size_t>();
    model.counts = header.at("counts").get<std::vector<double>>();
    model.inertia_history = header.at("inertia_history").get<std::vector<double>>();
    if (config_hash) *config_hash = header.value("config_hash", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed cluster model header: ") + e.what());
  }
  ByteReader in(payload);
  const std::size_t n = model.k() * model.position.dimension;
  model.centroids.resize(n);
  for (std::size_t i = 0; i < n; ++i) model.centroids[i] = in.f64();
  if (!in.done()) throw DataError("trailing bytes in cluster model");
  return model;
}

}  // namespace termweight
