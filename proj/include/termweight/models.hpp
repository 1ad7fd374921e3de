#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "termweight/index.hpp"
#include "termweight/representation.hpp"

namespace termweight {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
  bool operator==(const Bm25Params&) const = default;
};

/// Okapi BM25 term weight with natural-log idf and no query-side saturation.
/// Returns 0 for tf = 0 without touching the idf.
double bm25_weight(double tf, double df, double doc_length, double mean_length, double num_docs,
                   const Bm25Params& params);

struct Bm25Partials {
  double weight = 0.0;
  double d_k1 = 0.0;
  double d_b = 0.0;
};
Bm25Partials bm25_weight_partials(double tf, double df, double doc_length, double mean_length, double num_docs,
                                  const Bm25Params& params);

/// Unconstrained parameterization of BM25: k1 = softplus(kappa),
/// b = sigmoid(beta).
struct LearnableBm25 {
  double kappa = 0.0;
  double beta = 0.0;

  Bm25Params params() const;
  static LearnableBm25 from(const Bm25Params& params);
};

double softplus(double x);
double sigmoid(double x);

/// One-hidden-layer ReLU network mapping (x_td, x_t) to a term weight. The
/// output layer is linear.
struct MlpParams {
  std::size_t input_dim = 0;  // 2k
  std::size_t hidden = 50;
  std::vector<double> w1;  // hidden x input_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpParams initialize(std::size_t k, std::size_t hidden, std::uint64_t seed);
  static MlpParams zeros(std::size_t k, std::size_t hidden);

  std::size_t size() const { return w1.size() + b1.size() + w2.size() + 1; }
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

double mlp_weight(std::span<const double> x_td, std::span<const double> x_t, const MlpParams& params);

/// Adds `upstream` * d(output)/d(params) into `grad` (flattened layout) and
/// returns the output. The ReLU derivative at 0 is taken as 0.
double mlp_backward(std::span<const double> x_td, std::span<const double> x_t, const MlpParams& params,
                     double upstream, std::span<double> grad);

enum class ModelVariant { Bm25, LearnedBm25, Mlp };

std::string to_string(ModelVariant variant);
ModelVariant variant_from_string(std::string_view name);

/// Everything a model needs to weight a (term, document) pair.
struct ScoringContext {
  const PositionalIndex* index = nullptr;
  const RepresentationStore* reps = nullptr;

  ScoringContext(const PositionalIndex& index_, const RepresentationStore* reps_ = nullptr);
};

class RankingModel {
 public:
  static RankingModel bm25(const Bm25Params& params = {});
  static RankingModel learned_bm25(const Bm25Params& initial = {});
  static RankingModel mlp(MlpParams params);
  static RankingModel mlp(std::size_t k, std::size_t hidden, std::uint64_t seed);

  ModelVariant variant() const { return variant_; }
  bool trainable() const { return variant_ != ModelVariant::Bm25; }

  std::size_t num_parameters() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  /// Effective (k1, b) of the BM25 variants.
  Bm25Params bm25_params() const;
  const MlpParams& mlp_params() const { return mlp_; }

  /// w(t, d); zero when the term does not occur in the document.
  double weight(const ScoringContext& ctx, TermId term, DocId doc) const;
  /// Returns w(t, d) and adds upstream * dw/dtheta into `grad`.
  double weight_backward(const ScoringContext& ctx, TermId term, DocId doc, double upstream,
                         std::span<double> grad) const;

 private:
  ModelVariant variant_ = ModelVariant::Bm25;
  Bm25Params fixed_;
  LearnableBm25 learned_;
  MlpParams mlp_;
};

/// Sum over query tokens of w(t, d). Repeated tokens count once per
/// occurrence; terms absent from the document or collection contribute 0.
double score(const ScoringContext& ctx, std::span<const std::string> query_terms, DocId doc,
             const RankingModel& model);

struct ScoredDoc {
  DocId doc = 0;
  double score = 0.0;
};

/// Candidate documents by descending score, ties by ascending docno,
/// truncated to `cutoff`.
std::vector<ScoredDoc> rank(const ScoringContext& ctx, std::span<const std::string> query_terms,
                            const RankingModel& model, std::size_t cutoff);

/// JSON header line (variant, shapes, caller metadata) followed by the
/// parameter block as little-endian f64.
std::string serialize_checkpoint(const RankingModel& model, const nlohmann::json& metadata = nlohmann::json::object());
RankingModel parse_checkpoint(std::string_view bytes, nlohmann::json* header = nullptr);

}  // namespace termweight
