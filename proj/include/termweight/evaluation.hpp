#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "termweight/corpus.hpp"

namespace termweight {

struct RunEntry {
  std::string qid;
  std::string docno;
  std::size_t rank = 0;  // 1-based
  double score = 0.0;
  std::string tag;

  bool operator==(const RunEntry&) const = default;
};

struct EvalResult {
  std::map<std::string, double> per_query_ap;
  double map = 0.0;
  std::size_t num_queries = 0;

  nlohmann::json to_json() const;
};

/// Mean over relevant documents of precision at their ranks; relevant
/// documents that were not retrieved contribute 0. `relevant` must be
/// non-empty.
double average_precision(std::span<const std::string> ranking, const std::unordered_set<std::string>& relevant);

/// MAP over the qrels queries with at least one relevant document. Queries
/// absent from the run score 0; run queries without judgments are ignored.
EvalResult map_score(std::span<const RunEntry> run, std::span<const QrelEntry> qrels);

/// Checks that each query's entries are contiguous, ranked 1..n, and that
/// scores do not increase with rank.
void validate_run(std::span<const RunEntry> run);

/// `qid Q0 docno rank score tag` per line, score with 6 significant digits.
std::string format_run(std::span<const RunEntry> run);
std::vector<RunEntry> parse_run(std::string_view bytes);

void write_run(const std::filesystem::path& path, std::span<const RunEntry> run);
std::vector<RunEntry> read_run(const std::filesystem::path& path);

}  // namespace termweight
