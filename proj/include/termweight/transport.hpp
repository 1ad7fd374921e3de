#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace termweight {

struct PositionConfig {
  std::size_t dimension = 100;
  bool normalize = true;

  bool operator==(const PositionConfig&) const = default;
};

void to_json(nlohmann::json& j, const PositionConfig& config);
void from_json(const nlohmann::json& j, PositionConfig& config);

/// Equal-mass D-point approximation of a 1-D distribution, stored as its
/// non-decreasing support points. Euclidean geometry on these vectors is the
/// W2 geometry on the distributions they encode.
class QuantileVector {
 public:
  QuantileVector() = default;
  /// Validates ordering (and the [0, 1] range when normalized).
  QuantileVector(std::vector<double> values, bool normalized);

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  std::size_t dimension() const { return values_.size(); }
  bool normalized() const { return normalized_; }

  bool operator==(const QuantileVector&) const = default;

 private:
  std::vector<double> values_;
  bool normalized_ = true;
};

/// Position of token `position` on the axis selected by the config:
/// (p + 0.5) / doc_length when normalized, p otherwise.
double position_value(std::uint32_t position, std::uint32_t doc_length, bool normalize);

/// W2-optimal D-point quantization of the empirical distribution that puts
/// mass 1/n on each of the n occurrence positions.
QuantileVector quantize_positions(std::span<const std::uint32_t> positions, std::uint32_t doc_length,
                                  const PositionConfig& config);

/// Same, writing into `out` (size D). Used on hot paths.
void quantize_positions_into(std::span<const std::uint32_t> positions, std::uint32_t doc_length,
                             const PositionConfig& config, std::span<double> out);

/// Quantizes an arbitrary sorted sample (mass 1/n per value).
QuantileVector quantize_values(std::span<const double> sorted_values, std::size_t dimension, bool normalized);

/// Plain sum of squared component differences.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// sqrt(mean_j (a_j - b_j)^2).
double w2_distance(const QuantileVector& a, const QuantileVector& b);

/// Component-wise (weighted) mean; the W2 barycenter of equal-mass quantile
/// vectors. Weights, when given, must be non-negative and sum to 1.
QuantileVector w2_barycenter(std::span<const QuantileVector> points, std::span<const double> weights = {});

}  // namespace termweight
