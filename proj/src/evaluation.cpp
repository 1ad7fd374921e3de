#include "termweight/evaluation.hpp"

#include <charconv>
#include <cstdio>
#include <set>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"

namespace termweight {

nlohmann::json EvalResult::to_json() const {
  return nlohmann::json{{"map", map}, {"num_queries", num_queries}, {"per_query", per_query_ap}};
}

double average_precision(std::span<const std::string> ranking, const std::unordered_set<std::string>& relevant) {
  if (relevant.empty()) throw ConfigError("average precision needs at least one relevant document");
  double sum = 0.0;
  std::size_t hits = 0;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (!relevant.contains(ranking[r]) || !seen.insert(ranking[r]).second) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

EvalResult map_score(std::span<const RunEntry> run, std::span<const QrelEntry> qrels) {
  validate_run(run);
  std::map<std::string, std::unordered_set<std::string>> relevant;
  for (const auto& q : qrels)
    if (q.relevant) relevant[q.qid].insert(q.docno);
  std::map<std::string, std::vector<std::string>> rankings;
  for (const auto& e : run) rankings[e.qid].push_back(e.docno);

  EvalResult result;
  double total = 0.0;
  for (const auto& [qid, rel] : relevant) {
    auto it = rankings.find(qid);
    const double ap = it == rankings.end() ? 0.0 : average_precision(it->second, rel);
    result.per_query_ap[qid] = ap;
    total += ap;
  }
  result.num_queries = relevant.size();
  result.map = relevant.empty() ? 0.0 : total / static_cast<double>(relevant.size());
  return result;
}

void validate_run(std::span<const RunEntry> run) {
  std::set<std::string> finished;
  for (std::size_t i = 0; i < run.size(); ++i) {
    const auto& e = run[i];
    const bool continues = i > 0 && run[i - 1].qid == e.qid;
    if (!continues) {
      if (i > 0) finished.insert(run[i - 1].qid);
      if (finished.contains(e.qid)) throw DataError("run entries for query " + e.qid + " are not contiguous");
      if (e.rank != 1) throw DataError("ranks for query " + e.qid + " do not start at 1");
    } else {
      if (e.rank != run[i - 1].rank + 1) throw DataError("non-contiguous ranks for query " + e.qid);
      if (e.score > run[i - 1].score) throw DataError("scores increase with rank for query " + e.qid);
    }
    if (e.qid.empty() || e.docno.empty() || e.tag.empty()) throw DataError("run entry with an empty field");
  }
}

std::string format_run(std::span<const RunEntry> run) {
  validate_run(run);
  std::string out;
  char score[64];
  for (const auto& e : run) {
    std::snprintf(score, sizeof score, "%.6g", e.score);
    out += e.qid + " Q0 " + e.docno + " " + std::to_string(e.rank) + " " + score + " " + e.tag + "\n";
  }
  return out;
}

std::vector<RunEntry> parse_run(std::string_view bytes) {
  std::vector<RunEntry> run;
  std::size_t line_no = 0;
  std::size_t cursor = 0;
  while (cursor < bytes.size()) {
    std::size_t eol = bytes.find('\n', cursor);
    if (eol == std::string_view::npos) eol = bytes.size();
    const std::string_view line = bytes.substr(cursor, eol - cursor);
    cursor = eol + 1;
    ++line_no;
    std::vector<std::string_view> cols;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > start) cols.push_back(line.substr(start, i - start));
    }
    if (cols.empty()) continue;
    if (cols.size() != 6) throw ParseError("run line " + std::to_string(line_no) + ": expected 6 columns", line_no);
    RunEntry e;
    e.qid = cols[0];
    e.docno = cols[2];
    e.tag = cols[5];
    auto [p1, ec1] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), e.rank);
    auto [p2, ec2] = std::from_chars(cols[4].data(), cols[4].data() + cols[4].size(), e.score);
    if (ec1 != std::errc{} || p1 != cols[3].data() + cols[3].size() || ec2 != std::errc{} ||
        p2 != cols[4].data() + cols[4].size())
      throw ParseError("run line " + std::to_string(line_no) + ": bad rank or score", line_no);
    run.push_back(std::move(e));
  }
  validate_run(run);
  return run;
}

void write_run(const std::filesystem::path& path, std::span<const RunEntry> run) {
  write_file_atomic(path, format_run(run));
}

std::vector<RunEntry> read_run(const std::filesystem::path& path) { return parse_run(read_file(path)); }

}  // namespace termweight
