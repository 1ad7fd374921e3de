#include "termweight/index.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"
#include "termweight/parallel.hpp"

namespace termweight {
namespace {

constexpr std::uint32_t kPostingsMagic = 0x58495754;  // "TWIX"
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

PositionalIndex PositionalIndex::build(std::span<const RawDocument> documents, const TokenizerConfig& config) {
  PositionalIndex index;
  index.tokenizer_ = config;

  for (DocId d = 0; d < documents.size(); ++d) {
    if (!index.doc_lookup_.emplace(documents[d].docno, d).second)
      throw DataError("duplicate docno " + documents[d].docno);
    index.docnos_.push_back(documents[d].docno);
  }

  std::vector<std::vector<std::string>> tokens(documents.size());
  parallel_chunks(documents.size(), 64, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) tokens[d] = tokenize(documents[d].text, config);
  });

  // Single-writer merge in document order.
  std::map<std::string, std::vector<std::pair<DocId, std::vector<std::uint32_t>>>> inverted;
  index.lengths_.resize(documents.size());
  for (DocId d = 0; d < documents.size(); ++d) {
    index.lengths_[d] = static_cast<std::uint32_t>(tokens[d].size());
    index.total_length_ += tokens[d].size();
    std::map<std::string_view, std::vector<std::uint32_t>> local;
    for (std::uint32_t p = 0; p < tokens[d].size(); ++p) local[tokens[d][p]].push_back(p);
    for (auto& [term, positions] : local) inverted[std::string(term)].emplace_back(d, std::move(positions));
    tokens[d].clear();
    tokens[d].shrink_to_fit();
  }

  index.term_begin_.push_back(0);
  for (auto& [term, plist] : inverted) {
    index.term_lookup_.emplace(term, static_cast<TermId>(index.terms_.size()));
    index.terms_.push_back(term);
    for (auto& [doc, positions] : plist) {
      index.postings_.push_back(Posting{doc, static_cast<std::uint32_t>(positions.size()), index.positions_.size()});
      index.positions_.insert(index.positions_.end(), positions.begin(), positions.end());
    }
    index.term_begin_.push_back(index.postings_.size());
  }
  index.finalize();
  return index;
}

void PositionalIndex::finalize() { fingerprint_ = fnv1a64(serialize_postings()); }

double PositionalIndex::mean_doc_length() const {
  if (docnos_.empty()) return 0.0;
  return static_cast<double>(total_length_) / static_cast<double>(docnos_.size());
}

void PositionalIndex::check_doc(DocId doc) const {
  if (doc >= docnos_.size()) throw LookupError("unknown doc id " + std::to_string(doc));
}

std::uint32_t PositionalIndex::doc_length(DocId doc) const {
  check_doc(doc);
  return lengths_[doc];
}

const std::string& PositionalIndex::docno(DocId doc) const {
  check_doc(doc);
  return docnos_[doc];
}

std::optional<DocId> PositionalIndex::find_doc(std::string_view docno) const {
  auto it = doc_lookup_.find(std::string(docno));
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<TermId> PositionalIndex::find_term(std::string_view term) const {
  auto it = term_lookup_.find(std::string(term));
  if (it == term_lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t PositionalIndex::df(std::string_view term) const {
  auto id = find_term(term);
  return id ? df(*id) : 0;
}

std::uint32_t PositionalIndex::df(TermId id) const {
  return static_cast<std::uint32_t>(term_begin_.at(id + 1) - term_begin_.at(id));
}

std::span<const Posting> PositionalIndex::postings(TermId id) const {
  const std::size_t begin = term_begin_.at(id);
  return std::span<const Posting>(postings_).subspan(begin, term_begin_.at(id + 1) - begin);
}

std::optional<std::size_t> PositionalIndex::posting_index(TermId id, DocId doc) const {
  check_doc(doc);
  auto list = postings(id);
  auto it = std::lower_bound(list.begin(), list.end(), doc, [](const Posting& p, DocId d) { return p.doc < d; });
  if (it == list.end() || it->doc != doc) return std::nullopt;
  return term_begin_[id] + static_cast<std::size_t>(it - list.begin());
}

std::uint32_t PositionalIndex::tf(TermId id, DocId doc) const {
  auto at = posting_index(id, doc);
  return at ? postings_[*at].count : 0;
}

std::uint32_t PositionalIndex::tf(std::string_view term, DocId doc) const {
  check_doc(doc);
  auto id = find_term(term);
  return id ? tf(*id, doc) : 0;
}

std::span<const std::uint32_t> PositionalIndex::positions(const Posting& posting) const {
  return std::span<const std::uint32_t>(positions_).subspan(posting.begin, posting.count);
}

std::span<const std::uint32_t> PositionalIndex::positions(std::string_view term, DocId doc) const {
  check_doc(doc);
  auto id = find_term(term);
  if (!id) return {};
  auto at = posting_index(*id, doc);
  if (!at) return {};
  return positions(postings_[*at]);
}

std::vector<DocId> PositionalIndex::candidate_docs(std::span<const std::string> query_terms) const {
  std::vector<DocId> docs;
  for (const auto& term : query_terms) {
    auto id = find_term(term);
    if (!id) continue;
    for (const auto& p : postings(*id)) docs.push_back(p.doc);
  }
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  return docs;
}

std::string PositionalIndex::serialize_postings() const {
  ByteWriter out;
  out.u32(kPostingsMagic);
  out.u32(kFormatVersion);
  for (TermId t = 0; t < terms_.size(); ++t) {
    for (const auto& p : postings(t)) {
      out.u32(p.doc);
      out.u32(p.count);
      for (auto pos : positions(p)) out.u32(pos);
    }
  }
  return std::move(out).bytes();
}

void PositionalIndex::save(const std::filesystem::path& dir, const std::string& config_hash) const {
  const std::string blob = serialize_postings();

  nlohmann::json docs = nlohmann::json::array();
  for (DocId d = 0; d < docnos_.size(); ++d) docs.push_back({docnos_[d], lengths_[d]});

  // Byte offset of each term's first posting record.
  nlohmann::json terms = nlohmann::json::array();
  std::uint64_t offset = 8;
  for (TermId t = 0; t < terms_.size(); ++t) {
    terms.push_back({terms_[t], df(t), offset});
    for (const auto& p : postings(t)) offset += 8 + 4ULL * p.count;
  }

  nlohmann::json manifest = {
      {"format", "termweight-index"},
      {"version", kFormatVersion},
      {"config_hash", config_hash},
      {"tokenizer", tokenizer_},
      {"num_docs", num_docs()},
      {"num_terms", num_terms()},
      {"num_postings", num_postings()},
      {"num_positions", positions_.size()},
      {"total_length", total_length_},
      {"mean_doc_length", mean_doc_length()},
      {"postings_file", kIndexPostingsFile},
      {"postings_bytes", blob.size()},
      {"postings_fnv1a64", hex64(fnv1a64(blob))},
      {"docs", std::move(docs)},
      {"terms", std::move(terms)},
  };
  write_file_atomic(dir / kIndexPostingsFile, blob);
  write_file_atomic(dir / kIndexManifestFile, manifest.dump(1) + "\n");
}

PositionalIndex PositionalIndex::load(const std::filesystem::path& dir, std::string* config_hash) {
  const auto manifest_path = dir / kIndexManifestFile;
  const auto postings_path = dir / kIndexPostingsFile;
  if (!std::filesystem::exists(manifest_path)) throw DataError("missing " + manifest_path.string());
  if (!std::filesystem::exists(postings_path)) throw DataError("missing " + postings_path.string());

  PositionalIndex index;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
    if (manifest.at("format") != "termweight-index" || manifest.at("version") != kFormatVersion)
      throw DataError("unsupported index format in " + manifest_path.string());
    index.tokenizer_ = manifest.at("tokenizer").get<TokenizerConfig>();
    for (const auto& d : manifest.at("docs")) {
      index.doc_lookup_.emplace(d.at(0).get<std::string>(), static_cast<DocId>(index.docnos_.size()));
      index.docnos_.push_back(d.at(0).get<std::string>());
      index.lengths_.push_back(d.at(1).get<std::uint32_t>());
      index.total_length_ += index.lengths_.back();
    }
    for (const auto& t : manifest.at("terms")) {
      index.term_lookup_.emplace(t.at(0).get<std::string>(), static_cast<TermId>(index.terms_.size()));
      index.terms_.push_back(t.at(0).get<std::string>());
    }
    if (config_hash) *config_hash = manifest.value("config_hash", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed index manifest " + manifest_path.string() + ": " + e.what());
  }

  const std::string bytes = read_file(postings_path);
  if (hex64(fnv1a64(bytes)) != manifest.at("postings_fnv1a64").get<std::string>())
    throw DataError("postings checksum mismatch in " + postings_path.string());
  ByteReader in(bytes);
  if (in.u32() != kPostingsMagic || in.u32() != kFormatVersion)
    throw DataError("bad postings header in " + postings_path.string());
  index.term_begin_.push_back(0);
  const auto& terms = manifest.at("terms");
  for (TermId t = 0; t < index.terms_.size(); ++t) {
    const auto df = terms[t].at(1).get<std::uint32_t>();
    for (std::uint32_t i = 0; i < df; ++i) {
      Posting p;
      p.doc = in.u32();
      p.count = in.u32();
      p.begin = index.positions_.size();
      if (p.doc >= index.docnos_.size() || p.count == 0) throw DataError("corrupt posting for " + index.terms_[t]);
      for (std::uint32_t j = 0; j < p.count; ++j) index.positions_.push_back(in.u32());
      index.postings_.push_back(p);
    }
    index.term_begin_.push_back(index.postings_.size());
  }
  if (!in.done()) throw DataError("trailing bytes in " + postings_path.string());
  index.fingerprint_ = fnv1a64(bytes);
  return index;
}

}  // namespace termweight
