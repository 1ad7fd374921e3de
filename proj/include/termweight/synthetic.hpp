#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "termweight/corpus.hpp"

namespace termweight {

/// How relevance shows up in the query term's occurrences.
enum class SyntheticPattern {
  /// Same tf and length in both classes. Relevant: one occurrence in each of
  /// query_tf equal segments. Non-relevant: query_tf adjacent occurrences at a
  /// random offset in the second half.
  Positional,
  /// Relevant documents draw tf from [1, 2 query_tf], non-relevant from
  /// [1, query_tf]; lengths vary in [L/2, 3L/2] and positions are random.
  Frequency,
};

std::string to_string(SyntheticPattern pattern);
SyntheticPattern pattern_from_string(std::string_view name);

struct SyntheticSpec {
  std::size_t vocabulary_size = 200;
  std::size_t num_queries = 40;
  std::size_t relevant_per_query = 50;
  std::size_t nonrelevant_per_query = 50;
  std::size_t doc_length = 200;
  std::size_t query_tf = 4;
  SyntheticPattern pattern = SyntheticPattern::Positional;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

struct SyntheticBundle {
  std::vector<RawDocument> documents;
  std::vector<Topic> topics;
  std::vector<QrelEntry> qrels;
};

/// Each query owns one query term (never used as filler) and its own pool of
/// judged documents. Labels are shuffled against docnos, so ties broken by
/// docno carry no signal.
SyntheticBundle generate_synthetic(const SyntheticSpec& spec);

}  // namespace termweight
