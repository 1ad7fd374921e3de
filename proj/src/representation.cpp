#include "termweight/representation.hpp"

#include "termweight/errors.hpp"
#include "termweight/io.hpp"
#include "termweight/parallel.hpp"

namespace termweight {
namespace {

constexpr std::uint32_t kMagic = 0x53525754;  // "TWRS"
constexpr std::uint32_t kVersion = 1;

}  // namespace

RepresentationStore RepresentationStore::build(const PositionalIndex& index, const ClusterModel& model,
                                               Aggregation mode) {
  RepresentationStore store;
  store.k_ = model.k();
  store.mode_ = mode;
  store.index_fingerprint_ = index.fingerprint();
  const std::size_t k = store.k_;
  const std::size_t dim = model.position.dimension;
  store.term_doc_.resize(index.num_postings() * k);
  store.term_collection_.assign(index.num_terms() * k, 0.0);

  // Each term owns a contiguous block of postings; terms are independent.
  parallel_chunks(index.num_terms(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> p(dim);
    for (std::size_t t = begin; t < end; ++t) {
      const auto term = static_cast<TermId>(t);
      const std::size_t first = index.posting_begin(term);
      auto list = index.postings(term);
      double* total = store.term_collection_.data() + t * k;
      for (std::size_t i = 0; i < list.size(); ++i) {
        quantize_positions_into(index.positions(list[i]), index.doc_length(list[i].doc), model.position, p);
        std::span<double> x(store.term_doc_.data() + (first + i) * k, k);
        represent_term_doc_into(p, model, x);
        for (std::size_t c = 0; c < k; ++c) total[c] += x[c];
      }
      if (mode == Aggregation::Mean)
        for (std::size_t c = 0; c < k; ++c) total[c] /= static_cast<double>(list.size());
    }
  });
  return store;
}

std::span<const double> RepresentationStore::term_doc(const PositionalIndex& index, TermId term, DocId doc) const {
  auto at = index.posting_index(term, doc);
  if (!at) return {};
  return term_doc(*at);
}

void RepresentationStore::check_compatible(const PositionalIndex& index) const {
  if (index.fingerprint() != index_fingerprint_)
    throw DataError("representation store was built from a different index");
}

std::string RepresentationStore::serialize(std::uint64_t config_hash) const {
  ByteWriter out;
  out.u32(kMagic);
  out.u32(kVersion);
  out.u32(static_cast<std::uint32_t>(k_));
  out.u32(mode_ == Aggregation::Sum ? 0 : 1);
  out.u64(index_fingerprint_);
  out.u64(config_hash);
  out.u64(k_ ? term_collection_.size() / k_ : 0);
  out.u64(k_ ? term_doc_.size() / k_ : 0);
  out.f64s(term_doc_);
  out.f64s(term_collection_);
  return std::move(out).bytes();
}

RepresentationStore RepresentationStore::parse(std::string_view bytes, std::uint64_t* config_hash) {
  ByteReader in(bytes);
  if (in.u32() != kMagic || in.u32() != kVersion) throw DataError("not a representation store");
  RepresentationStore store;
  store.k_ = in.u32();
  store.mode_ = in.u32() == 0 ? Aggregation::Sum : Aggregation::Mean;
  store.index_fingerprint_ = in.u64();
  const std::uint64_t hash = in.u64();
  if (config_hash) *config_hash = hash;
  const std::uint64_t terms = in.u64();
  const std::uint64_t postings = in.u64();
  store.term_doc_.resize(postings * store.k_);
  store.term_collection_.resize(terms * store.k_);
  for (double& v : store.term_doc_) v = in.f64();
  for (double& v : store.term_collection_) v = in.f64();
  if (!in.done()) throw DataError("trailing bytes in representation store");
  return store;
}

}  // namespace termweight
