#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "termweight/index.hpp"
#include "termweight/transport.hpp"

namespace termweight {

/// Row-major set of quantile vectors with a multiplicity per row. Identical
/// vectors may be stored once with their count; k-means over the weighted
/// rows is the same problem as over the expanded multiset.
struct PointMatrix {
  std::size_t dimension = 0;
  bool normalized = true;
  std::vector<double> values;
  std::vector<double> weights;

  std::size_t rows() const { return weights.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * dimension, dimension);
  }
  double total_weight() const;

  void append(std::span<const double> row, double weight = 1.0);
  static PointMatrix from_vectors(std::span<const QuantileVector> points);
};

/// One point per (term, document) posting of `index`, uniformly subsampled to
/// at most `sample_cap` postings, with identical vectors merged.
PointMatrix collect_points(const PositionalIndex& index, const PositionConfig& config, std::size_t sample_cap,
                           std::uint64_t seed);

struct KMeansConfig {
  std::size_t k = 10;
  std::size_t max_iter = 100;
  double rel_tol = 1e-6;
  /// Independent k-means++ restarts; the lowest-inertia run is kept.
  std::size_t n_init = 1;
  std::size_t sample_cap = 1'000'000;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const KMeansConfig& config);
void from_json(const nlohmann::json& j, KMeansConfig& config);

struct ClusterModel {
  PositionConfig position;
  KMeansConfig kmeans;
  std::vector<double> centroids;  // k x D, row-major
  std::vector<double> counts;     // member weight per centroid at the final assignment
  double inertia = 0.0;           // sum of squared W2 to the nearest centroid
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // of the kept restart

  std::size_t k() const { return kmeans.k; }
  std::span<const double> centroid(std::size_t i) const {
    return std::span<const double>(centroids).subspan(i * position.dimension, position.dimension);
  }
  QuantileVector centroid_vector(std::size_t i) const;
};

/// Lloyd iterations under the W2 metric with k-means++ seeding. Ties go to the
/// lowest centroid index; an emptied cluster is re-seeded to the point farthest
/// from its centroid. Throws NumericError if inertia ever increases.
ClusterModel fit_kmeans(const PointMatrix& points, const KMeansConfig& config);
ClusterModel fit_kmeans(std::span<const QuantileVector> points, const KMeansConfig& config);

/// Index of the nearest centroid under `metric_scale` times the W2 distance.
std::size_t nearest_centroid(std::span<const double> point, const ClusterModel& model, double metric_scale = 1.0);

/// Component i is the W2 distance from `p_td` to centroid i.
std::vector<double> represent_term_doc(const QuantileVector& p_td, const ClusterModel& model);
void represent_term_doc_into(std::span<const double> p_td, const ClusterModel& model, std::span<double> out);

enum class Aggregation { Sum, Mean };

std::string to_string(Aggregation mode);
Aggregation aggregation_from_string(std::string_view name);

/// Sum (or mean over df) of the term's per-document representations.
std::vector<double> represent_term_collection(std::string_view term, const PositionalIndex& index,
                                              const ClusterModel& model, Aggregation mode);

/// CSV with header `cluster,count,q1..qD`, one row per centroid.
std::string export_clusters(const ClusterModel& model);

/// JSON header line followed by the k x D centroid block (little-endian f64).
std::string serialize_cluster_model(const ClusterModel& model, const std::string& config_hash = {});
ClusterModel parse_cluster_model(std::string_view bytes, std::string* config_hash = nullptr);

}  // namespace termweight
