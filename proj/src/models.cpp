#include "termweight/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"

namespace termweight {

void Bm25Params::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw ConfigError("BM25 k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("BM25 b must lie in [0, 1]");
}

Bm25Partials bm25_weight_partials(double tf, double df, double doc_length, double mean_length, double num_docs,
                                  const Bm25Params& params) {
  if (!(mean_length > 0.0)) throw ConfigError("BM25 needs a positive mean document length");
  if (tf <= 0.0) return {};
  const double idf = std::log((num_docs - df + 0.5) / (df + 0.5));
  const double norm = 1.0 - params.b + params.b * doc_length / mean_length;
  const double denom = tf + params.k1 * norm;
  Bm25Partials out;
  out.weight = tf * (params.k1 + 1.0) / denom * idf;
  out.d_k1 = idf * tf * (tf - norm) / (denom * denom);
  out.d_b = -idf * tf * (params.k1 + 1.0) * params.k1 * (doc_length / mean_length - 1.0) / (denom * denom);
  return out;
}

double bm25_weight(double tf, double df, double doc_length, double mean_length, double num_docs,
                   const Bm25Params& params) {
  return bm25_weight_partials(tf, df, doc_length, mean_length, num_docs, params).weight;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Bm25Params LearnableBm25::params() const { return Bm25Params{softplus(kappa), sigmoid(beta)}; }

LearnableBm25 LearnableBm25::from(const Bm25Params& params) {
  params.validate();
  if (params.b <= 0.0 || params.b >= 1.0) throw ConfigError("learnable BM25 needs b strictly inside (0, 1)");
  return LearnableBm25{std::log(std::expm1(params.k1)), std::log(params.b / (1.0 - params.b))};
}

MlpParams MlpParams::zeros(std::size_t k, std::size_t hidden) {
  if (k == 0 || hidden == 0) throw ConfigError("MLP needs k >= 1 and hidden >= 1");
  MlpParams p;
  p.input_dim = 2 * k;
  p.hidden = hidden;
  p.w1.assign(hidden * p.input_dim, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(hidden, 0.0);
  return p;
}

MlpParams MlpParams::initialize(std::size_t k, std::size_t hidden, std::uint64_t seed) {
  MlpParams p = zeros(k, hidden);
  std::mt19937_64 rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(p.input_dim + hidden));
  std::uniform_real_distribution<double> u1(-a1, a1);
  for (double& w : p.w1) w = u1(rng);
  const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  std::uniform_real_distribution<double> u2(-a2, a2);
  for (double& w : p.w2) w = u2(rng);
  return p;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  flat.insert(flat.end(), w1.begin(), w1.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.push_back(b2);
  return flat;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw ConfigError("MLP parameter count mismatch");
  auto it = flat.begin();
  std::copy_n(it, w1.size(), w1.begin());
  it += static_cast<std::ptrdiff_t>(w1.size());
  std::copy_n(it, b1.size(), b1.begin());
  it += static_cast<std::ptrdiff_t>(b1.size());
  std::copy_n(it, w2.size(), w2.begin());
  it += static_cast<std::ptrdiff_t>(w2.size());
  b2 = *it;
}

namespace {

double pre_activation(std::span<const double> x_td, std::span<const double> x_t, const MlpParams& p,
                      std::size_t unit) {
  const std::size_t k = x_td.size();
  const double* row = p.w1.data() + unit * p.input_dim;
  double z = p.b1[unit];
  for (std::size_t i = 0; i < k; ++i) z += row[i] * x_td[i];
  for (std::size_t i = 0; i < k; ++i) z += row[k + i] * x_t[i];
  return z;
}

void check_inputs(std::span<const double> x_td, std::span<const double> x_t, const MlpParams& p) {
  if (x_td.size() != x_t.size() || x_td.size() + x_t.size() != p.input_dim)
    throw ConfigError("MLP input dimension mismatch: expected 2x" + std::to_string(p.input_dim / 2));
}

}  // namespace

double mlp_weight(std::span<const double> x_td, std::span<const double> x_t, const MlpParams& params) {
  check_inputs(x_td, x_t, params);
  double out = params.b2;
  for (std::size_t u = 0; u < params.hidden; ++u) {
    const double z = pre_activation(x_td, x_t, params, u);
    if (z > 0.0) out += params.w2[u] * z;
  }
  return out;
}

double mlp_backward(std::span<const double> x_td, std::span<const double> x_t, const MlpParams& params,
                    double upstream, std::span<double> grad) {
  check_inputs(x_td, x_t, params);
  if (grad.size() != params.size()) throw ConfigError("MLP gradient buffer size mismatch");
  const std::size_t k = x_td.size();
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + params.w1.size();
  double* g_w2 = g_b1 + params.b1.size();
  double* g_b2 = g_w2 + params.w2.size();
  double out = params.b2;
  for (std::size_t u = 0; u < params.hidden; ++u) {
    const double z = pre_activation(x_td, x_t, params, u);
    if (z <= 0.0) continue;
    out += params.w2[u] * z;
    g_w2[u] += upstream * z;
    const double dz = upstream * params.w2[u];
    g_b1[u] += dz;
    double* row = g_w1 + u * params.input_dim;
    for (std::size_t i = 0; i < k; ++i) row[i] += dz * x_td[i];
    for (std::size_t i = 0; i < k; ++i) row[k + i] += dz * x_t[i];
  }
  *g_b2 += upstream;
  return out;
}

std::string to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::Bm25:
      return "bm25";
    case ModelVariant::LearnedBm25:
      return "learned-bm25";
    case ModelVariant::Mlp:
      return "mlp";
  }
  return "unknown";
}

ModelVariant variant_from_string(std::string_view name) {
  if (name == "bm25") return ModelVariant::Bm25;
  if (name == "learned-bm25") return ModelVariant::LearnedBm25;
  if (name == "mlp") return ModelVariant::Mlp;
  throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

ScoringContext::ScoringContext(const PositionalIndex& index_, const RepresentationStore* reps_)
    : index(&index_), reps(reps_) {
  if (reps) reps->check_compatible(index_);
}

RankingModel RankingModel::bm25(const Bm25Params& params) {
  params.validate();
  RankingModel m;
  m.variant_ = ModelVariant::Bm25;
  m.fixed_ = params;
  return m;
}

RankingModel RankingModel::learned_bm25(const Bm25Params& initial) {
  RankingModel m;
  m.variant_ = ModelVariant::LearnedBm25;
  m.learned_ = LearnableBm25::from(initial);
  return m;
}

RankingModel RankingModel::mlp(MlpParams params) {
  RankingModel m;
  m.variant_ = ModelVariant::Mlp;
  m.mlp_ = std::move(params);
  return m;
}

RankingModel RankingModel::mlp(std::size_t k, std::size_t hidden, std::uint64_t seed) {
  return mlp(MlpParams::initialize(k, hidden, seed));
}

std::size_t RankingModel::num_parameters() const {
  switch (variant_) {
    case ModelVariant::Bm25:
      return 0;
    case ModelVariant::LearnedBm25:
      return 2;
    case ModelVariant::Mlp:
      return mlp_.size();
  }
  return 0;
}

std::vector<double> RankingModel::parameters() const {
  switch (variant_) {
    case ModelVariant::Bm25:
      return {};
    case ModelVariant::LearnedBm25:
      return {learned_.kappa, learned_.beta};
    case ModelVariant::Mlp:
      return mlp_.flatten();
  }
  return {};
}

void RankingModel::set_parameters(std::span<const double> values) {
  if (values.size() != num_parameters()) throw ConfigError("parameter count mismatch");
  if (variant_ == ModelVariant::LearnedBm25) {
    learned_.kappa = values[0];
    learned_.beta = values[1];
  } else if (variant_ == ModelVariant::Mlp) {
    mlp_.assign(values);
  }
}

Bm25Params RankingModel::bm25_params() const {
  if (variant_ == ModelVariant::LearnedBm25) return learned_.params();
  return fixed_;
}

double RankingModel::weight(const ScoringContext& ctx, TermId term, DocId doc) const {
  const PositionalIndex& index = *ctx.index;
  auto at = index.posting_index(term, doc);
  if (!at) return 0.0;
  if (variant_ == ModelVariant::Mlp) {
    if (!ctx.reps) throw DataError("MLP scoring needs a representation store");
    return mlp_weight(ctx.reps->term_doc(*at), ctx.reps->term_collection(term), mlp_);
  }
  return bm25_weight(index.tf(term, doc), index.df(term), index.doc_length(doc), index.mean_doc_length(),
                     static_cast<double>(index.num_docs()), bm25_params());
}

double RankingModel::weight_backward(const ScoringContext& ctx, TermId term, DocId doc, double upstream,
                                     std::span<double> grad) const {
  const PositionalIndex& index = *ctx.index;
  auto at = index.posting_index(term, doc);
  if (!at) return 0.0;
  switch (variant_) {
    case ModelVariant::Bm25:
      return weight(ctx, term, doc);
    case ModelVariant::LearnedBm25: {
      const Bm25Params p = learned_.params();
      const auto parts = bm25_weight_partials(index.tf(term, doc), index.df(term), index.doc_length(doc),
                                              index.mean_doc_length(), static_cast<double>(index.num_docs()), p);
      grad[0] += upstream * parts.d_k1 * sigmoid(learned_.kappa);
      grad[1] += upstream * parts.d_b * p.b * (1.0 - p.b);
      return parts.weight;
    }
    case ModelVariant::Mlp:
      if (!ctx.reps) throw DataError("MLP scoring needs a representation store");
      return mlp_backward(ctx.reps->term_doc(*at), ctx.reps->term_collection(term), mlp_, upstream, grad);
  }
  return 0.0;
}

double score(const ScoringContext& ctx, std::span<const std::string> query_terms, DocId doc,
             const RankingModel& model) {
  ctx.index->doc_length(doc);  // validates the id
  double total = 0.0;
  for (const auto& term : query_terms) {
    auto id = ctx.index->find_term(term);
    if (id) total += model.weight(ctx, *id, doc);
  }
  return total;
}

std::vector<ScoredDoc> rank(const ScoringContext& ctx, std::span<const std::string> query_terms,
                            const RankingModel& model, std::size_t cutoff) {
  if (cutoff == 0) throw ConfigError("ranking cutoff must be >= 1");
  std::vector<ScoredDoc> ranked;
  for (DocId doc : ctx.index->candidate_docs(query_terms)) ranked.push_back({doc, score(ctx, query_terms, doc, model)});
  const PositionalIndex& index = *ctx.index;
  std::sort(ranked.begin(), ranked.end(), [&](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return index.docno(a.doc) < index.docno(b.doc);
  });
  if (ranked.size() > cutoff) ranked.resize(cutoff);
  return ranked;
}

std::string serialize_checkpoint(const RankingModel& model, const nlohmann::json& metadata) {
  nlohmann::json header = {
      {"format", "termweight-checkpoint"},
      {"version", 1},
      {"variant", to_string(model.variant())},
      {"num_parameters", model.num_parameters()},
      {"metadata", metadata},
  };
  if (model.variant() == ModelVariant::Mlp) {
    header["k"] = model.mlp_params().input_dim / 2;
    header["hidden"] = model.mlp_params().hidden;
  } else {
    header["k1"] = model.bm25_params().k1;
    header["b"] = model.bm25_params().b;
  }
  ByteWriter payload;
  payload.f64s(model.parameters());
  return pack_header_file(header, payload.bytes());
}

RankingModel parse_checkpoint(std::string_view bytes, nlohmann::json* header_out) {
  auto [header, payload] = unpack_header_file(bytes);
  RankingModel model;
  try {
    if (header.at("format") != "termweight-checkpoint") throw DataError("not a checkpoint file");
    switch (variant_from_string(header.at("variant").get<std::string>())) {
      case ModelVariant::Bm25:
        model = RankingModel::bm25({header.at("k1").get<double>(), header.at("b").get<double>()});
        break;
      case ModelVariant::LearnedBm25:
        model = RankingModel::learned_bm25();
        break;
      case ModelVariant::Mlp:
        model = RankingModel::mlp(MlpParams::zeros(header.at("k").get<std::size_t>(), header.at("hidden").get<std::size_t>()));
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }
  ByteReader in(payload);
  std::vector<double> params(model.num_parameters());
  for (double& v : params) v = in.f64();
  if (!in.done()) throw DataError("trailing bytes in checkpoint");
  model.set_parameters(params);
  if (header_out) *header_out = std::move(header);
  return model;
}

}  // namespace termweight
