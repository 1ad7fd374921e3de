#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace termweight {

struct RawDocument {
  std::string docno;
  std::string text;

  bool operator==(const RawDocument&) const = default;
};

struct Topic {
  std::string qid;
  std::vector<std::string> terms;

  bool operator==(const Topic&) const = default;
};

struct QrelEntry {
  std::string qid;
  std::string docno;
  bool relevant = false;

  bool operator==(const QrelEntry&) const = default;
};

/// Tokens are maximal runs of ASCII alphanumerics or non-ASCII bytes. The
/// configuration is stored in the index manifest so queries are tokenized
/// exactly like the collection.
struct TokenizerConfig {
  bool lowercase = true;
  std::set<std::string> stopwords;

  bool operator==(const TokenizerConfig&) const = default;
};

void to_json(nlohmann::json& j, const TokenizerConfig& config);
void from_json(const nlohmann::json& j, TokenizerConfig& config);

/// Tokens in occurrence order. A token's position is its index in the
/// returned list, i.e. positions are counted after stopword removal.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

/// Parses concatenated <DOC> blocks. Each block needs exactly one <DOCNO>;
/// the document text is the trimmed content of every other element, joined
/// with newlines.
std::vector<RawDocument> parse_trec_documents(std::string_view bytes);
std::string format_trec_documents(std::span<const RawDocument> documents);

/// Parses <top> blocks, reading <num> (optional "Number:" prefix) and
/// <title> (optional "Topic:" prefix). Titles that tokenize to nothing are
/// rejected.
std::vector<Topic> parse_topics(std::string_view bytes, const TokenizerConfig& config = {});
std::string format_topics(std::span<const Topic> topics);

/// Four whitespace-separated columns: qid, iteration, docno, relevance.
std::vector<QrelEntry> parse_qrels(std::string_view bytes);
std::string format_qrels(std::span<const QrelEntry> qrels);

}  // namespace termweight
