#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termweight/clustering.hpp"
#include "termweight/index.hpp"

namespace termweight {

/// Precomputed x_td for every posting of an index and x_t for every term,
/// against a fixed cluster model. Rows are aligned with the index's global
/// posting order, so the store is only valid for the index it was built from
/// (checked through the index fingerprint).
class RepresentationStore {
 public:
  RepresentationStore() = default;

  static RepresentationStore build(const PositionalIndex& index, const ClusterModel& model, Aggregation mode);

  std::size_t k() const { return k_; }
  Aggregation aggregation() const { return mode_; }
  std::uint64_t index_fingerprint() const { return index_fingerprint_; }

  std::span<const double> term_doc(std::size_t posting_index) const {
    return std::span<const double>(term_doc_).subspan(posting_index * k_, k_);
  }
  std::span<const double> term_collection(TermId term) const {
    return std::span<const double>(term_collection_).subspan(static_cast<std::size_t>(term) * k_, k_);
  }

  /// Empty when the term does not occur in the document.
  std::span<const double> term_doc(const PositionalIndex& index, TermId term, DocId doc) const;

  void check_compatible(const PositionalIndex& index) const;

  /// Binary layout (little-endian): magic "TWRS", u32 version, u32 k, u32 mode
  /// (0 sum, 1 mean), u64 index fingerprint, u64 config hash, u64 num_terms,
  /// u64 num_postings, then num_postings * k f64 term-document rows in posting
  /// order, then num_terms * k f64 term-collection rows in term-id order.
  std::string serialize(std::uint64_t config_hash = 0) const;
  static RepresentationStore parse(std::string_view bytes, std::uint64_t* config_hash = nullptr);

 private:
  std::size_t k_ = 0;
  Aggregation mode_ = Aggregation::Mean;
  std::uint64_t index_fingerprint_ = 0;
  std::vector<double> term_doc_;
  std::vector<double> term_collection_;
};

}  // namespace termweight
