#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termweight/corpus.hpp"

namespace termweight {

using DocId = std::uint32_t;
using TermId = std::uint32_t;

/// One (term, document) entry. Positions live in the index's shared position
/// array at [begin, begin + count).
struct Posting {
  DocId doc = 0;
  std::uint32_t count = 0;
  std::uint64_t begin = 0;
};

/// Immutable positional inverted index.
///
/// Term ids follow lexicographic term order, document ids follow input order.
/// Postings of a term are sorted by document id and every position list is
/// strictly increasing and bounded by the document length.
class PositionalIndex {
 public:
  PositionalIndex() = default;

  static PositionalIndex build(std::span<const RawDocument> documents, const TokenizerConfig& config);

  std::size_t num_docs() const { return docnos_.size(); }
  std::size_t num_terms() const { return terms_.size(); }
  std::size_t num_postings() const { return postings_.size(); }
  double mean_doc_length() const;
  std::uint64_t total_length() const { return total_length_; }

  std::uint32_t doc_length(DocId doc) const;
  const std::string& docno(DocId doc) const;
  std::optional<DocId> find_doc(std::string_view docno) const;

  std::optional<TermId> find_term(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_.at(id); }

  std::uint32_t df(std::string_view term) const;
  std::uint32_t df(TermId id) const;
  std::uint32_t tf(std::string_view term, DocId doc) const;
  std::uint32_t tf(TermId id, DocId doc) const;
  std::span<const std::uint32_t> positions(std::string_view term, DocId doc) const;
  std::span<const std::uint32_t> positions(const Posting& posting) const;

  std::span<const Posting> postings(TermId id) const;
  /// Global index of the (term, doc) posting, usable as a key into per-posting
  /// side tables. Empty when the term does not occur in the document.
  std::optional<std::size_t> posting_index(TermId id, DocId doc) const;
  std::size_t posting_begin(TermId id) const { return term_begin_.at(id); }

  /// Documents containing at least one query term, ascending by id.
  std::vector<DocId> candidate_docs(std::span<const std::string> query_terms) const;

  const TokenizerConfig& tokenizer() const { return tokenizer_; }

  /// Hash of the postings block; identifies index content in derived artifacts.
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Writes `<dir>/index.manifest.json` and `<dir>/index.postings.bin`.
  void save(const std::filesystem::path& dir, const std::string& config_hash = {}) const;
  static PositionalIndex load(const std::filesystem::path& dir, std::string* config_hash = nullptr);

  std::string serialize_postings() const;

 private:
  void check_doc(DocId doc) const;
  void finalize();

  TokenizerConfig tokenizer_;
  std::vector<std::string> docnos_;
  std::vector<std::uint32_t> lengths_;
  std::unordered_map<std::string, DocId> doc_lookup_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> term_lookup_;
  std::vector<std::size_t> term_begin_;  // CSR offsets into postings_, size num_terms + 1
  std::vector<Posting> postings_;
  std::vector<std::uint32_t> positions_;
  std::uint64_t total_length_ = 0;
  std::uint64_t fingerprint_ = 0;
};

inline constexpr const char* kIndexManifestFile = "index.manifest.json";
inline constexpr const char* kIndexPostingsFile = "index.postings.bin";

}  // namespace termweight
