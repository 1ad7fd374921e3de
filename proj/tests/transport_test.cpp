#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "termweight/errors.hpp"
#include "termweight/transport.hpp"

namespace termweight {
namespace {

QuantileVector qv(std::vector<double> v) { return QuantileVector(std::move(v), true); }

std::vector<std::uint32_t> random_positions(std::mt19937_64& rng, std::uint32_t length, std::size_t max_count) {
  std::set<std::uint32_t> picked;
  const std::size_t n = 1 + rng() % std::min<std::size_t>(max_count, length);
  while (picked.size() < n) picked.insert(static_cast<std::uint32_t>(rng() % length));
  return {picked.begin(), picked.end()};
}

std::vector<double> values_of(std::span<const std::uint32_t> positions, std::uint32_t length) {
  std::vector<double> out;
  for (auto p : positions) out.push_back(position_value(p, length, true));
  return out;
}

TEST(Quantize, PointMassIsConstant) {
  const std::vector<double> at{0.25};
  for (std::size_t d : {1u, 3u, 7u, 100u}) {
    const auto q = quantize_values(at, d, true);
    for (double v : q.values()) EXPECT_EQ(v, 0.25);
  }
}

TEST(Quantize, IdentityWhenCountMatchesDimension) {
  const std::vector<double> at{0.1, 0.9};
  EXPECT_EQ(quantize_values(at, 2, true), qv({0.1, 0.9}));
}

TEST(Quantize, HalfMassSplitsExactly) {
  const std::vector<double> at{0.0, 1.0};
  EXPECT_EQ(quantize_values(at, 4, true), qv({0.0, 0.0, 1.0, 1.0}));
}

TEST(Quantize, NormalizedPositionsUseTokenCenters) {
  const std::vector<std::uint32_t> positions{0, 3};
  const auto q = quantize_positions(positions, 4, PositionConfig{2, true});
  EXPECT_EQ(q, qv({0.125, 0.875}));
  const auto raw = quantize_positions(positions, 4, PositionConfig{2, false});
  EXPECT_EQ(raw, QuantileVector({0.0, 3.0}, false));
}

TEST(Quantize, RejectsUnsortedOrOutOfRangePositions) {
  const std::vector<std::uint32_t> unsorted{3, 1};
  const std::vector<std::uint32_t> beyond{0, 9};
  EXPECT_THROW(quantize_positions(unsorted, 10, {}), Error);
  EXPECT_THROW(quantize_positions(beyond, 9, {}), Error);
}

TEST(W2Distance, Examples) {
  const auto p = qv({0.1, 0.2, 0.7});
  EXPECT_EQ(w2_distance(p, p), 0.0);
  EXPECT_NEAR(w2_distance(qv({0.3, 0.3, 0.3}), qv({0.8, 0.8, 0.8})), 0.5, 1e-15);
  EXPECT_NEAR(w2_distance(qv({0, 0, 1, 1}), qv({0, 0, 0, 0})), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(w2_distance(qv({0, 0, 1, 1}), qv({0, 0, 0, 0})), 0.70711, 1e-5);
}

TEST(W2Distance, MismatchedShapesAreRejected) {
  EXPECT_THROW(w2_distance(qv({0.1}), qv({0.1, 0.2})), ConfigError);
  EXPECT_THROW(w2_distance(qv({0.1}), QuantileVector({0.1}, false)), ConfigError);
}

TEST(W2Barycenter, Examples) {
  const std::vector<QuantileVector> single{qv({0.2, 0.4})};
  EXPECT_EQ(w2_barycenter(single), single[0]);
  const std::vector<QuantileVector> ends{qv({0, 0, 0}), qv({1, 1, 1})};
  EXPECT_EQ(w2_barycenter(ends), qv({0.5, 0.5, 0.5}));
  const std::vector<QuantileVector> pair{qv({0, 1}), qv({0.2, 0.3})};
  const auto bc = w2_barycenter(pair);
  EXPECT_NEAR(bc[0], 0.1, 1e-15);
  EXPECT_NEAR(bc[1], 0.65, 1e-15);
  EXPECT_THROW(w2_barycenter(std::span<const QuantileVector>{}), Error);
}

TEST(TransportOracle, Examples) {
  const std::vector<double> a{0.3, 0.7};
  EXPECT_EQ(oracle::w2_squared(oracle::uniform_atoms(a), oracle::uniform_atoms(a)), 0.0);
  const std::vector<double> zero{0.0};
  const std::vector<double> one{1.0};
  const std::vector<double> both{0.0, 1.0};
  EXPECT_EQ(oracle::w2_squared(oracle::uniform_atoms(zero), oracle::uniform_atoms(one)), 1.0);
  EXPECT_EQ(oracle::w2_squared(oracle::uniform_atoms(both), oracle::uniform_atoms(zero)), 0.5);
  const std::vector<double> q{0, 0, 1, 1};
  const std::vector<double> z{0, 0, 0, 0};
  EXPECT_NEAR(std::sqrt(oracle::w2_squared(oracle::uniform_atoms(q), oracle::uniform_atoms(z))), 0.70711, 1e-5);
}

TEST(TransportProperty, SquaredDistanceMatchesOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t length = 1 + rng() % 40;
    const std::size_t d = 1 + rng() % 8;
    const PositionConfig config{d, true};
    const auto a = quantize_positions(random_positions(rng, length, 10), length, config);
    const auto b = quantize_positions(random_positions(rng, length, 10), length, config);
    const double w2 = w2_distance(a, b);
    const double expected = oracle::w2_squared(oracle::uniform_atoms(a.values()), oracle::uniform_atoms(b.values()));
    EXPECT_NEAR(w2 * w2, expected, 1e-12);
  }
}

TEST(TransportProperty, QuantizerIsOptimalAmongSortedCandidates) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t length = 1 + rng() % 40;
    const std::size_t d = 1 + rng() % 8;
    const auto positions = random_positions(rng, length, 10);
    const auto source = oracle::uniform_atoms(values_of(positions, length));
    const auto q = quantize_positions(positions, length, PositionConfig{d, true});
    const double best = oracle::w2_squared(source, oracle::uniform_atoms(q.values()));
    for (int c = 0; c < 1000; ++c) {
      std::vector<double> candidate(d);
      for (auto& v : candidate) v = unit(rng);
      std::sort(candidate.begin(), candidate.end());
      EXPECT_LE(best, oracle::w2_squared(source, oracle::uniform_atoms(candidate)) + 1e-12);
    }
  }
}

TEST(TransportProperty, IdentityAndTriangleInequality) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint32_t length = 1 + rng() % 60;
    const PositionConfig config{1 + rng() % 12, true};
    const auto a = quantize_positions(random_positions(rng, length, 12), length, config);
    const auto b = quantize_positions(random_positions(rng, length, 12), length, config);
    const auto c = quantize_positions(random_positions(rng, length, 12), length, config);
    EXPECT_EQ(w2_distance(a, a), 0.0);
    EXPECT_LE(w2_distance(a, c), w2_distance(a, b) + w2_distance(b, c) + 1e-12);
  }
}

TEST(TransportProperty, QuantizedVectorsAreSortedAndInRange) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint32_t length = 1 + rng() % 500;
    const auto q = quantize_positions(random_positions(rng, length, 50), length, PositionConfig{1 + rng() % 120});
    EXPECT_TRUE(std::is_sorted(q.values().begin(), q.values().end()));
    EXPECT_GE(q.values().front(), 0.0);
    EXPECT_LE(q.values().back(), 1.0);
  }
}

}  // namespace
}  // namespace termweight
