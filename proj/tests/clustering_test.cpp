#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "termweight/clustering.hpp"
#include "termweight/errors.hpp"
#include "termweight/synthetic.hpp"

namespace termweight {
namespace {

QuantileVector point_mass(double at, std::size_t d) { return QuantileVector(std::vector<double>(d, at), true); }

std::vector<QuantileVector> random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::vector<QuantileVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t length = 1 + rng() % 30;
    std::set<std::uint32_t> picked;
    const std::size_t count = 1 + rng() % std::min<std::uint32_t>(6, length);
    while (picked.size() < count) picked.insert(static_cast<std::uint32_t>(rng() % length));
    const std::vector<std::uint32_t> positions(picked.begin(), picked.end());
    out.push_back(quantize_positions(positions, length, PositionConfig{d, true}));
  }
  return out;
}

double direct_inertia(std::span<const QuantileVector> points, const ClusterModel& model) {
  double total = 0.0;
  for (const auto& p : points) {
    double best = INFINITY;
    for (std::size_t c = 0; c < model.k(); ++c) best = std::min(best, std::pow(w2_distance(p, model.centroid_vector(c)), 2));
    total += best;
  }
  return total;
}

TEST(KMeans, SingleClusterIsTheBarycenter) {
  std::mt19937_64 rng(31);
  const auto points = random_points(rng, 12, 5);
  const auto model = fit_kmeans(points, KMeansConfig{.k = 1});
  const auto bc = w2_barycenter(points);
  double variance = 0.0;
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(model.centroid(0)[j], bc[j], 1e-12);
  for (const auto& p : points) variance += std::pow(w2_distance(p, bc), 2);
  EXPECT_NEAR(model.inertia, variance, 1e-12);
}

TEST(KMeans, TwoSeparatedGroups) {
  std::vector<QuantileVector> points;
  for (double jitter : {0.0, 0.01, 0.02}) points.push_back(point_mass(0.1 + jitter, 4));
  for (double jitter : {0.0, 0.02}) points.push_back(point_mass(0.9 - jitter, 4));
  const auto model = fit_kmeans(points, KMeansConfig{.k = 2, .seed = 5});
  std::vector<double> firsts{model.centroid(0)[0], model.centroid(1)[0]};
  std::sort(firsts.begin(), firsts.end());
  EXPECT_NEAR(firsts[0], 0.11, 1e-12);
  EXPECT_NEAR(firsts[1], 0.89, 1e-12);
  std::vector<std::vector<double>> raw;
  for (const auto& p : points) raw.emplace_back(p.values().begin(), p.values().end());
  EXPECT_NEAR(model.inertia, oracle::best_partition_inertia(raw, 2), 1e-12);
}

TEST(KMeans, IdenticalPointsHaveZeroInertia) {
  const std::vector<QuantileVector> points(6, point_mass(0.5, 3));
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto model = fit_kmeans(points, KMeansConfig{.k = k});
    EXPECT_EQ(model.inertia, 0.0);
    EXPECT_EQ(model.k(), k);
  }
}

TEST(KMeans, FewerPointsThanClustersIsRejected) {
  const std::vector<QuantileVector> points(2, point_mass(0.5, 3));
  EXPECT_THROW(fit_kmeans(points, KMeansConfig{.k = 3}), DataError);
}

TEST(KMeansProperty, InertiaHistoryIsNonIncreasing) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto points = random_points(rng, 60, 6);
    const auto model = fit_kmeans(points, KMeansConfig{.k = 1 + rng() % 6, .rel_tol = 0.0, .seed = rng()});
    for (std::size_t i = 1; i < model.inertia_history.size(); ++i)
      EXPECT_LE(model.inertia_history[i], model.inertia_history[i - 1] * (1 + 1e-12) + 1e-12);
    EXPECT_NEAR(model.inertia, direct_inertia(points, model), 1e-9);
  }
}

TEST(KMeansProperty, MatchesExhaustiveOptimumOnTinyInstances) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(3, n);
    const auto points = random_points(rng, n, 1 + rng() % 4);
    const auto model = fit_kmeans(points, KMeansConfig{.k = k, .rel_tol = 0.0, .n_init = 20, .seed = rng()});
    std::vector<std::vector<double>> raw;
    for (const auto& p : points) raw.emplace_back(p.values().begin(), p.values().end());
    EXPECT_NEAR(model.inertia, oracle::best_partition_inertia(raw, k), 1e-9) << "trial " << trial;
  }
}

TEST(KMeansProperty, AssignmentsAreScaleInvariant) {
  std::mt19937_64 rng(34);
  const auto points = random_points(rng, 50, 5);
  const auto model = fit_kmeans(points, KMeansConfig{.k = 4, .seed = 3});
  for (const auto& p : points) {
    const auto base = nearest_centroid(p.values(), model);
    for (double scale : {0.5, 2.0, 10.0}) EXPECT_EQ(nearest_centroid(p.values(), model, scale), base);
  }
}

TEST(KMeansProperty, MergedDuplicatesKeepTheirMultiplicity) {
  std::mt19937_64 rng(35);
  auto points = random_points(rng, 20, 4);
  points.insert(points.end(), points.begin(), points.begin() + 10);
  PointMatrix merged;
  merged.dimension = 4;
  for (std::size_t i = 0; i < 20; ++i) merged.append(points[i].values(), i < 10 ? 2.0 : 1.0);
  const auto model = fit_kmeans(merged, KMeansConfig{.k = 3, .rel_tol = 0.0, .seed = 9});
  // The weighted objective is the objective over the expanded multiset.
  EXPECT_NEAR(model.inertia, direct_inertia(points, model), 1e-12);
  EXPECT_EQ(model.counts[0] + model.counts[1] + model.counts[2], 30.0);
}

ClusterModel endpoints_model() {
  ClusterModel model;
  model.position = PositionConfig{4, true};
  model.kmeans.k = 2;
  model.centroids = {0, 0, 0, 0, 1, 1, 1, 1};
  model.counts = {1, 1};
  return model;
}

TEST(RepresentTermDoc, Examples) {
  const auto model = endpoints_model();
  const auto x = represent_term_doc(point_mass(0.25, 4), model);
  EXPECT_NEAR(x[0], 0.25, 1e-15);
  EXPECT_NEAR(x[1], 0.75, 1e-15);
  EXPECT_EQ(represent_term_doc(model.centroid_vector(1), model)[1], 0.0);
}

TEST(RepresentTermDocProperty, ComponentsAreNonNegative) {
  std::mt19937_64 rng(36);
  const auto points = random_points(rng, 40, 6);
  const auto model = fit_kmeans(points, KMeansConfig{.k = 5, .seed = 1});
  for (const auto& p : points)
    for (double v : represent_term_doc(p, model)) EXPECT_GE(v, 0.0);
}

TEST(RepresentTermCollection, SumAndMean) {
  const std::vector<RawDocument> docs{{"A", "x y x y y"}, {"B", "y x"}, {"C", "z"}};
  const auto index = PositionalIndex::build(docs, {});
  const auto model = endpoints_model();

  const auto single = represent_term_collection("z", index, model, Aggregation::Sum);
  const auto direct = represent_term_doc(quantize_positions(index.positions("z", 2), 1, model.position), model);
  EXPECT_EQ(single, direct);
  EXPECT_EQ(represent_term_collection("z", index, model, Aggregation::Mean), direct);

  const auto sum = represent_term_collection("x", index, model, Aggregation::Sum);
  const auto mean = represent_term_collection("x", index, model, Aggregation::Mean);
  const auto xa = represent_term_doc(quantize_positions(index.positions("x", 0), 5, model.position), model);
  const auto xb = represent_term_doc(quantize_positions(index.positions("x", 1), 2, model.position), model);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(sum[c], xa[c] + xb[c]);
    EXPECT_EQ(mean[c], (xa[c] + xb[c]) / 2.0);
  }
  EXPECT_THROW(represent_term_collection("absent", index, model, Aggregation::Sum), LookupError);
}

TEST(RepresentTermCollectionProperty, SumIsDfTimesMean) {
  const auto bundle = generate_synthetic(SyntheticSpec{.vocabulary_size = 30, .num_queries = 3,
                                                       .relevant_per_query = 5, .nonrelevant_per_query = 5,
                                                       .doc_length = 40, .seed = 3});
  const auto index = PositionalIndex::build(bundle.documents, {});
  const auto points = collect_points(index, PositionConfig{8, true}, 1'000'000, 1);
  const auto model = fit_kmeans(points, KMeansConfig{.k = 3, .seed = 2});
  for (TermId t = 0; t < index.num_terms(); ++t) {
    const auto sum = represent_term_collection(index.term(t), index, model, Aggregation::Sum);
    const auto mean = represent_term_collection(index.term(t), index, model, Aggregation::Mean);
    const double df = index.df(t);
    // Division then multiplication by df is exact only up to rounding.
    for (std::size_t c = 0; c < model.k(); ++c) EXPECT_NEAR(sum[c], df * mean[c], 4e-16 * sum[c]);
  }
}

TEST(ExportClusters, RowsAndSortedValues) {
  std::vector<QuantileVector> points(7, point_mass(0.5, 3));
  const auto one = fit_kmeans(points, KMeansConfig{.k = 1});
  EXPECT_EQ(export_clusters(one), "cluster,count,q1,q2,q3\n0,7,0.5,0.5,0.5\n");

  std::mt19937_64 rng(37);
  const auto model = fit_kmeans(random_points(rng, 30, 5), KMeansConfig{.k = 4, .seed = 7});
  const auto csv = export_clusters(model);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 1 + model.k());
  for (std::size_t c = 0; c < model.k(); ++c) {
    const auto row = model.centroid(c);
    EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
  }
}

TEST(ClusterModelPersistence, RoundTrip) {
  std::mt19937_64 rng(38);
  const auto model = fit_kmeans(random_points(rng, 30, 5), KMeansConfig{.k = 3, .seed = 7});
  std::string hash;
  const auto bytes = serialize_cluster_model(model, "feed");
  const auto parsed = parse_cluster_model(bytes, &hash);
  EXPECT_EQ(hash, "feed");
  EXPECT_EQ(parsed.centroids, model.centroids);
  EXPECT_EQ(parsed.counts, model.counts);
  EXPECT_EQ(serialize_cluster_model(parsed, "feed"), bytes);
}

}  // namespace
}  // namespace termweight
