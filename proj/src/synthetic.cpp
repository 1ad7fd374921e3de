#include "termweight/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "termweight/errors.hpp"

namespace termweight {
namespace {

std::string vocabulary_term(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "w%04zu", i);
  return buf;
}

std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

void validate(const SyntheticSpec& spec) {
  if (spec.vocabulary_size <= spec.num_queries)
    throw ConfigError("synthetic vocabulary must leave filler terms beyond the query terms");
  if (spec.query_tf == 0) throw ConfigError("synthetic query_tf must be >= 1");
  if (spec.pattern == SyntheticPattern::Positional && spec.doc_length < 2 * spec.query_tf)
    throw ConfigError("doc_length too short for query_tf adjacent occurrences in the second half");
  if (spec.pattern == SyntheticPattern::Frequency && spec.doc_length / 2 < 2 * spec.query_tf)
    throw ConfigError("doc_length too short for the frequency pattern's tf range");
}

}  // namespace

std::string to_string(SyntheticPattern pattern) {
  return pattern == SyntheticPattern::Positional ? "positional" : "frequency";
}

SyntheticPattern pattern_from_string(std::string_view name) {
  if (name == "positional") return SyntheticPattern::Positional;
  if (name == "frequency") return SyntheticPattern::Frequency;
  throw ConfigError("unknown synthetic pattern '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"vocabulary_size", s.vocabulary_size},
                     {"num_queries", s.num_queries},
                     {"relevant_per_query", s.relevant_per_query},
                     {"nonrelevant_per_query", s.nonrelevant_per_query},
                     {"doc_length", s.doc_length},
                     {"query_tf", s.query_tf},
                     {"pattern", to_string(s.pattern)},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s = SyntheticSpec{};
  if (j.contains("vocabulary_size")) s.vocabulary_size = j.at("vocabulary_size").get<std::size_t>();
  if (j.contains("num_queries")) s.num_queries = j.at("num_queries").get<std::size_t>();
  if (j.contains("relevant_per_query")) s.relevant_per_query = j.at("relevant_per_query").get<std::size_t>();
  if (j.contains("nonrelevant_per_query")) s.nonrelevant_per_query = j.at("nonrelevant_per_query").get<std::size_t>();
  if (j.contains("doc_length")) s.doc_length = j.at("doc_length").get<std::size_t>();
  if (j.contains("query_tf")) s.query_tf = j.at("query_tf").get<std::size_t>();
  if (j.contains("pattern")) s.pattern = pattern_from_string(j.at("pattern").get<std::string>());
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
}

SyntheticBundle generate_synthetic(const SyntheticSpec& spec) {
  SyntheticBundle bundle;
  const std::size_t per_query = spec.relevant_per_query + spec.nonrelevant_per_query;
  if (spec.num_queries == 0 || per_query == 0) return bundle;
  validate(spec);

  std::mt19937_64 rng(spec.seed);
  const std::size_t filler_begin = spec.num_queries;
  const std::size_t filler_end = spec.vocabulary_size - 1;

  for (std::size_t q = 0; q < spec.num_queries; ++q) {
    const std::string query_term = vocabulary_term(q);
    const std::string qid = std::to_string(q + 1);
    bundle.topics.push_back(Topic{qid, {query_term}});

    std::vector<bool> labels(per_query, false);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(spec.relevant_per_query), true);
    std::shuffle(labels.begin(), labels.end(), rng);

    for (std::size_t j = 0; j < per_query; ++j) {
      const bool relevant = labels[j];
      std::size_t length = spec.doc_length;
      std::vector<std::size_t> hits;
      if (spec.pattern == SyntheticPattern::Positional) {
        const std::size_t tf = spec.query_tf;
        if (relevant) {
          for (std::size_t s = 0; s < tf; ++s)
            hits.push_back(uniform_int(rng, s * length / tf, (s + 1) * length / tf - 1));
        } else {
          const std::size_t offset = uniform_int(rng, length / 2, length - tf);
          for (std::size_t s = 0; s < tf; ++s) hits.push_back(offset + s);
        }
      } else {
        length = uniform_int(rng, spec.doc_length / 2, spec.doc_length + spec.doc_length / 2);
        const std::size_t tf = relevant ? uniform_int(rng, 1, 2 * spec.query_tf) : uniform_int(rng, 1, spec.query_tf);
        std::vector<std::size_t> all(length);
        for (std::size_t p = 0; p < length; ++p) all[p] = p;
        std::sample(all.begin(), all.end(), std::back_inserter(hits), tf, rng);
      }

      std::vector<std::string> tokens(length);
      for (auto p : hits) tokens[p] = query_term;
      for (auto& token : tokens)
        if (token.empty()) token = vocabulary_term(uniform_int(rng, filler_begin, filler_end));
      if (spec.pattern == SyntheticPattern::Positional &&
          static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), query_term)) != spec.query_tf)
        throw ConfigError("synthetic generator broke tf parity");

      std::string text;
      for (std::size_t p = 0; p < tokens.size(); ++p) {
        if (p) text.push_back(p % 20 == 0 ? '\n' : ' ');
        text += tokens[p];
      }
      char docno[64];
      std::snprintf(docno, sizeof docno, "SYN%llu-%03zu-%03zu", static_cast<unsigned long long>(spec.seed), q + 1, j);
      bundle.documents.push_back(RawDocument{docno, std::move(text)});
      bundle.qrels.push_back(QrelEntry{qid, docno, relevant});
    }
  }
  return bundle;
}

}  // namespace termweight
