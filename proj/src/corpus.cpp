#include "termweight/corpus.hpp"

#include <charconv>
#include <set>
#include <utility>

#include "termweight/errors.hpp"

namespace termweight {
namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (ascii_lower(s[i]) != ascii_lower(prefix[i])) return false;
  return true;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
  if (needle.size() > haystack.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i)
    if (iequals_prefix(haystack.substr(i), needle)) return i;
  return std::string_view::npos;
}

// Text between the end of `tag` and the next '<'.
std::string_view field_after(std::string_view block, std::size_t tag_end) {
  auto stop = block.find('<', tag_end);
  return block.substr(tag_end, stop == std::string_view::npos ? std::string_view::npos : stop - tag_end);
}

std::string_view strip_label(std::string_view field, std::string_view label) {
  field = trim(field);
  if (iequals_prefix(field, label)) field = trim(field.substr(label.size()));
  return field;
}

}  // namespace

void to_json(nlohmann::json& j, const TokenizerConfig& config) {
  j = nlohmann::json{{"lowercase", config.lowercase}, {"stopwords", config.stopwords}};
}

void from_json(const nlohmann::json& j, TokenizerConfig& config) {
  config = TokenizerConfig{};
  if (j.contains("lowercase")) config.lowercase = j.at("lowercase").get<bool>();
  if (j.contains("stopwords")) config.stopwords = j.at("stopwords").get<std::set<std::string>>();
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::string token(text.substr(start, i - start));
    if (config.lowercase)
      for (char& c : token) c = ascii_lower(c);
    if (config.stopwords.contains(token)) continue;
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<RawDocument> parse_trec_documents(std::string_view bytes) {
  constexpr std::string_view kOpen = "<DOC>";
  constexpr std::string_view kClose = "</DOC>";
  constexpr std::string_view kNoOpen = "<DOCNO>";
  constexpr std::string_view kNoClose = "</DOCNO>";

  std::vector<RawDocument> documents;
  std::size_t cursor = 0;
  while (true) {
    const std::size_t open = bytes.find(kOpen, cursor);
    if (open == std::string_view::npos) break;
    const std::size_t body_begin = open + kOpen.size();
    const std::size_t close = bytes.find(kClose, body_begin);
    const std::size_t next_open = bytes.find(kOpen, body_begin);
    if (close == std::string_view::npos || (next_open != std::string_view::npos && next_open < close))
      throw ParseError("unterminated DOC at byte " + std::to_string(open), open);
    const std::string_view body = bytes.substr(body_begin, close - body_begin);

    const std::size_t no_open = body.find(kNoOpen);
    if (no_open == std::string_view::npos)
      throw ParseError("missing DOCNO in DOC at byte " + std::to_string(open), open);
    const std::size_t no_close = body.find(kNoClose, no_open);
    if (no_close == std::string_view::npos)
      throw ParseError("unterminated DOCNO in DOC at byte " + std::to_string(open), open);
    if (body.find(kNoOpen, no_close) != std::string_view::npos)
      throw ParseError("multiple DOCNO in DOC at byte " + std::to_string(open), open);

    RawDocument doc;
    doc.docno = std::string(trim(body.substr(no_open + kNoOpen.size(), no_close - no_open - kNoOpen.size())));
    if (doc.docno.empty()) throw ParseError("empty DOCNO in DOC at byte " + std::to_string(open), open);

    // Everything except the DOCNO element, with markup removed.
    std::string rest(body.substr(0, no_open));
    rest.push_back('<');
    rest.push_back('>');
    rest.append(body.substr(no_close + kNoClose.size()));
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t lt = rest.find('<', pos);
      std::string_view piece = trim(std::string_view(rest).substr(pos, lt == std::string::npos ? std::string::npos : lt - pos));
      if (!piece.empty()) {
        if (!doc.text.empty()) doc.text.push_back('\n');
        doc.text.append(piece);
      }
      if (lt == std::string::npos) break;
      std::size_t gt = rest.find('>', lt);
      if (gt == std::string::npos) break;
      pos = gt + 1;
    }
    documents.push_back(std::move(doc));
    cursor = close + kClose.size();
  }
  return documents;
}

std::string format_trec_documents(std::span<const RawDocument> documents) {
  std::string out;
  for (const auto& doc : documents) {
    out += "<DOC>\n<DOCNO>";
    out += doc.docno;
    out += "</DOCNO>\n<TEXT>\n";
    out += doc.text;
    out += "\n</TEXT>\n</DOC>\n";
  }
  return out;
}

std::vector<Topic> parse_topics(std::string_view bytes, const TokenizerConfig& config) {
  std::vector<Topic> topics;
  std::size_t cursor = 0;
  while (true) {
    const std::size_t open = ifind(bytes, "<top>", cursor);
    if (open == std::string_view::npos) break;
    std::size_t close = ifind(bytes, "</top>", open);
    if (close == std::string_view::npos) throw ParseError("unterminated <top> at byte " + std::to_string(open), open);
    const std::string_view block = bytes.substr(open, close - open);

    const std::size_t num = ifind(block, "<num>", 0);
    if (num == std::string_view::npos) throw ParseError("topic without <num> at byte " + std::to_string(open), open);
    const std::size_t title = ifind(block, "<title>", 0);
    if (title == std::string_view::npos)
      throw ParseError("topic without <title> at byte " + std::to_string(open), open);

    Topic topic;
    topic.qid = std::string(strip_label(field_after(block, num + 5), "Number:"));
    if (topic.qid.empty()) throw ParseError("empty <num> at byte " + std::to_string(open), open);
    topic.terms = tokenize(strip_label(field_after(block, title + 7), "Topic:"), config);
    if (topic.terms.empty()) throw ParseError("empty query for topic " + topic.qid, open);
    topics.push_back(std::move(topic));
    cursor = close + 6;
  }
  return topics;
}

std::string format_topics(std::span<const Topic> topics) {
  std::string out;
  for (const auto& topic : topics) {
    out += "<top>\n<num> Number: ";
    out += topic.qid;
    out += "\n<title> ";
    for (std::size_t i = 0; i < topic.terms.size(); ++i) {
      if (i) out.push_back(' ');
      out += topic.terms[i];
    }
    out += "\n</top>\n\n";
  }
  return out;
}

std::vector<QrelEntry> parse_qrels(std::string_view bytes) {
  std::vector<QrelEntry> qrels;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::size_t cursor = 0;
  while (cursor < bytes.size()) {
    std::size_t eol = bytes.find('\n', cursor);
    if (eol == std::string_view::npos) eol = bytes.size();
    const std::string_view line = bytes.substr(cursor, eol - cursor);
    cursor = eol + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    std::vector<std::string_view> cols;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && is_space(line[i])) ++i;
      std::size_t start = i;
      while (i < line.size() && !is_space(line[i])) ++i;
      if (i > start) cols.push_back(line.substr(start, i - start));
    }
    if (cols.size() != 4)
      throw ParseError("qrels line " + std::to_string(line_no) + ": expected 4 columns", line_no);
    long rel = 0;
    auto [ptr, ec] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), rel);
    if (ec != std::errc{} || ptr != cols[3].data() + cols[3].size())
      throw ParseError("qrels line " + std::to_string(line_no) + ": bad relevance value", line_no);
    QrelEntry entry{std::string(cols[0]), std::string(cols[2]), rel > 0};
    if (!seen.emplace(entry.qid, entry.docno).second)
      throw ParseError("qrels line " + std::to_string(line_no) + ": duplicate judgment", line_no);
    qrels.push_back(std::move(entry));
  }
  return qrels;
}

std::string format_qrels(std::span<const QrelEntry> qrels) {
  std::string out;
  for (const auto& q : qrels) {
    out += q.qid;
    out += " 0 ";
    out += q.docno;
    out += q.relevant ? " 1\n" : " 0\n";
  }
  return out;
}

}  // namespace termweight
