#include "termweight/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "termweight/errors.hpp"

namespace termweight {

void to_json(nlohmann::json& j, const PositionConfig& config) {
  j = nlohmann::json{{"dimension", config.dimension}, {"normalize", config.normalize}};
}

void from_json(const nlohmann::json& j, PositionConfig& config) {
  config = PositionConfig{};
  if (j.contains("dimension")) config.dimension = j.at("dimension").get<std::size_t>();
  if (j.contains("normalize")) config.normalize = j.at("normalize").get<bool>();
  if (config.dimension == 0) throw ConfigError("position dimension must be >= 1");
}

QuantileVector::QuantileVector(std::vector<double> values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
  if (values_.empty()) throw ConfigError("quantile vector needs dimension >= 1");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) throw NumericError("non-finite quantile value");
    if (j > 0 && values_[j] < values_[j - 1]) throw ConfigError("quantile values must be non-decreasing");
    if (normalized_ && (values_[j] < 0.0 || values_[j] > 1.0))
      throw ConfigError("normalized quantile values must lie in [0, 1]");
  }
}

double position_value(std::uint32_t position, std::uint32_t doc_length, bool normalize) {
  if (!normalize) return static_cast<double>(position);
  return (static_cast<double>(position) + 0.5) / static_cast<double>(doc_length);
}

namespace {

// Work in units of 1/(n*D) of mass: source point i covers [i*D, (i+1)*D),
// output point j covers [j*n, (j+1)*n). Overlaps are exact integers and
// out[j] = sum_i overlap(i, j) * x_i / n.
template <typename ValueAt>
void quantize_impl(std::size_t n, ValueAt value_at, std::span<double> out) {
  const std::size_t dim = out.size();
  std::size_t i = 0;
  for (std::size_t j = 0; j < dim; ++j) {
    const std::size_t lo = j * n;
    const std::size_t hi = lo + n;
    while ((i + 1) * dim <= lo) ++i;
    double acc = 0.0;
    for (std::size_t r = i; r < n && r * dim < hi; ++r) {
      const std::size_t a = std::max(lo, r * dim);
      const std::size_t b = std::min(hi, (r + 1) * dim);
      acc += static_cast<double>(b - a) * value_at(r);
    }
    out[j] = acc / static_cast<double>(n);
  }
}

// Averages of a sorted sequence over consecutive windows are ordered, but
// rounding can invert ties by an ulp.
void restore_order(std::span<double> values, bool normalized) {
  for (std::size_t j = 1; j < values.size(); ++j)
    if (values[j] < values[j - 1]) values[j] = values[j - 1];
  if (normalized)
    for (double& v : values) v = std::min(1.0, std::max(0.0, v));
}

}  // namespace

void quantize_positions_into(std::span<const std::uint32_t> positions, std::uint32_t doc_length,
                             const PositionConfig& config, std::span<double> out) {
  const std::size_t n = positions.size();
  if (n == 0) throw DataError("cannot quantize an empty position list");
  if (out.size() != config.dimension) throw ConfigError("output size does not match dimension");
  for (std::size_t i = 0; i < n; ++i) {
    if (positions[i] >= doc_length)
      throw DataError("position " + std::to_string(positions[i]) + " outside document of length " +
                      std::to_string(doc_length));
    if (i > 0 && positions[i] <= positions[i - 1]) throw DataError("positions must be strictly increasing");
  }
  quantize_impl(n, [&](std::size_t r) { return position_value(positions[r], doc_length, config.normalize); }, out);
  restore_order(out, config.normalize);
}

QuantileVector quantize_values(std::span<const double> sorted_values, std::size_t dimension, bool normalized) {
  if (sorted_values.empty()) throw DataError("cannot quantize an empty distribution");
  if (dimension == 0) throw ConfigError("position dimension must be >= 1");
  for (std::size_t i = 1; i < sorted_values.size(); ++i)
    if (sorted_values[i] < sorted_values[i - 1]) throw DataError("values must be sorted");
  std::vector<double> out(dimension);
  quantize_impl(sorted_values.size(), [&](std::size_t r) { return sorted_values[r]; }, out);
  restore_order(out, normalized);
  return QuantileVector(std::move(out), normalized);
}

QuantileVector quantize_positions(std::span<const std::uint32_t> positions, std::uint32_t doc_length,
                                  const PositionConfig& config) {
  std::vector<double> values(config.dimension);
  quantize_positions_into(positions, doc_length, config, values);
  return QuantileVector(std::move(values), config.normalize);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

double w2_distance(const QuantileVector& a, const QuantileVector& b) {
  if (a.dimension() != b.dimension()) throw ConfigError("quantile vectors differ in dimension");
  if (a.normalized() != b.normalized()) throw ConfigError("quantile vectors differ in position domain");
  return std::sqrt(squared_distance(a.values(), b.values()) / static_cast<double>(a.dimension()));
}

QuantileVector w2_barycenter(std::span<const QuantileVector> points, std::span<const double> weights) {
  if (points.empty()) throw ConfigError("barycenter of an empty set");
  if (!weights.empty() && weights.size() != points.size()) throw ConfigError("one weight per point required");
  const std::size_t dim = points.front().dimension();
  const bool normalized = points.front().normalized();
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].dimension() != dim || points[i].normalized() != normalized)
      throw ConfigError("barycenter points must share dimension and domain");
    if (!weights.empty()) {
      if (weights[i] < 0.0) throw ConfigError("negative barycenter weight");
      total += weights[i];
    }
  }
  if (!weights.empty() && std::abs(total - 1.0) > 1e-9) throw ConfigError("barycenter weights must sum to 1");

  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    for (std::size_t j = 0; j < dim; ++j) mean[j] += w * points[i][j];
  }
  if (weights.empty())
    for (double& v : mean) v /= static_cast<double>(points.size());
  for (std::size_t j = 1; j < dim; ++j)
    if (mean[j] < mean[j - 1]) mean[j] = mean[j - 1];
  if (normalized)
    for (double& v : mean) v = std::min(1.0, std::max(0.0, v));
  return QuantileVector(std::move(mean), normalized);
}

}  // namespace termweight
