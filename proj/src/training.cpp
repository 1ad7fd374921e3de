#include "termweight/training.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"
#include "termweight/parallel.hpp"

namespace termweight {
namespace {

constexpr std::size_t kMaxLrHalvings = 5;
constexpr std::size_t kSlotChunk = 256;

template <typename Pools, typename Emit>
void sample_pools(const Pools& pools, std::span<const std::uint32_t> valid, std::size_t count, std::uint64_t seed,
                  Emit emit) {
  if (count == 0) return;
  if (valid.empty()) throw DataError("no topic has both a relevant and a judged non-relevant document");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_topic(0, valid.size() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t t = valid[pick_topic(rng)];
    const auto& pool = pools[t];
    std::uniform_int_distribution<std::size_t> pick_rel(0, pool.relevant.size() - 1);
    const std::size_t a = pick_rel(rng);
    std::uniform_int_distribution<std::size_t> pick_non(0, pool.nonrelevant.size() - 1);
    const std::size_t b = pick_non(rng);
    emit(t, pool.relevant[a], pool.nonrelevant[b]);
  }
}

struct StringPool {
  std::vector<std::string> relevant;
  std::vector<std::string> nonrelevant;
};

}  // namespace

std::vector<Triple> sample_triples(std::span<const Topic> topics, std::span<const QrelEntry> qrels,
                                   std::size_t count, std::uint64_t seed) {
  std::map<std::string, std::uint32_t> topic_of;
  std::vector<StringPool> pools(topics.size());
  for (std::uint32_t t = 0; t < topics.size(); ++t) topic_of.emplace(topics[t].qid, t);
  for (const auto& q : qrels) {
    auto it = topic_of.find(q.qid);
    if (it == topic_of.end()) continue;
    (q.relevant ? pools[it->second].relevant : pools[it->second].nonrelevant).push_back(q.docno);
  }
  std::vector<std::uint32_t> valid;
  for (std::uint32_t t = 0; t < pools.size(); ++t)
    if (!pools[t].relevant.empty() && !pools[t].nonrelevant.empty()) valid.push_back(t);

  std::vector<Triple> out;
  out.reserve(count);
  sample_pools(pools, valid, count, seed, [&](std::uint32_t t, const std::string& a, const std::string& b) {
    out.push_back(Triple{topics[t].qid, a, b});
  });
  return out;
}

double TrainConfig::epsilon_for(ModelVariant variant) const {
  if (adam_epsilon) return *adam_epsilon;
  return variant == ModelVariant::Mlp ? 1e-8 : 1e-4;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"iterations", c.iterations},
                     {"triples_per_iteration", c.triples_per_iteration},
                     {"learning_rate", c.learning_rate},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_epsilon", c.adam_epsilon ? nlohmann::json(*c.adam_epsilon) : nlohmann::json(nullptr)},
                     {"minibatches", c.minibatches},
                     {"include_unjudged", c.include_unjudged},
                     {"checkpoint_every", c.checkpoint_every},
                     {"record_wall_clock", c.record_wall_clock},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("iterations")) c.iterations = j.at("iterations").get<std::size_t>();
  if (j.contains("triples_per_iteration")) c.triples_per_iteration = j.at("triples_per_iteration").get<std::size_t>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("adam_beta1")) c.adam_beta1 = j.at("adam_beta1").get<double>();
  if (j.contains("adam_beta2")) c.adam_beta2 = j.at("adam_beta2").get<double>();
  if (j.contains("adam_epsilon") && !j.at("adam_epsilon").is_null()) c.adam_epsilon = j.at("adam_epsilon").get<double>();
  if (j.contains("minibatches")) c.minibatches = j.at("minibatches").get<std::size_t>();
  if (j.contains("include_unjudged")) c.include_unjudged = j.at("include_unjudged").get<bool>();
  if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  if (j.contains("record_wall_clock")) c.record_wall_clock = j.at("record_wall_clock").get<bool>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (c.learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (c.minibatches == 0) throw ConfigError("minibatches must be >= 1");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) || !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0))
    throw ConfigError("ADAM betas must lie in [0, 1)");
  if (c.adam_epsilon && !(*c.adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, const AdamConfig& config) {
  if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ConfigError("ADAM shapes do not match");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericError("non-finite gradient");
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

double ranknet_pair_loss(double delta) { return softplus(-delta); }

TrainingSet TrainingSet::build(const PositionalIndex& index, std::span<const Topic> topics,
                               std::span<const QrelEntry> qrels, bool include_unjudged) {
  TrainingSet set;
  std::map<std::string, std::uint32_t> topic_of;
  for (std::uint32_t t = 0; t < topics.size(); ++t) {
    TopicData data;
    data.qid = topics[t].qid;
    std::map<TermId, std::uint32_t> counts;
    for (const auto& term : topics[t].terms)
      if (auto id = index.find_term(term)) ++counts[*id];
    data.terms.assign(counts.begin(), counts.end());
    topic_of.emplace(data.qid, t);
    set.topics_.push_back(std::move(data));
  }
  std::vector<std::set<DocId>> judged(topics.size());
  for (const auto& q : qrels) {
    auto it = topic_of.find(q.qid);
    if (it == topic_of.end()) continue;
    auto doc = index.find_doc(q.docno);
    if (!doc) continue;
    auto& data = set.topics_[it->second];
    (q.relevant ? data.relevant : data.nonrelevant).push_back(*doc);
    judged[it->second].insert(*doc);
  }
  if (include_unjudged) {
    for (std::uint32_t t = 0; t < topics.size(); ++t)
      for (DocId d : index.candidate_docs(topics[t].terms))
        if (!judged[t].contains(d)) set.topics_[t].nonrelevant.push_back(d);
  }
  for (std::uint32_t t = 0; t < set.topics_.size(); ++t)
    if (!set.topics_[t].relevant.empty() && !set.topics_[t].nonrelevant.empty()) set.valid_.push_back(t);
  return set;
}

std::vector<TrainingSet::IndexedTriple> TrainingSet::sample(std::size_t count, std::uint64_t seed) const {
  std::vector<IndexedTriple> out;
  out.reserve(count);
  sample_pools(topics_, valid_, count, seed,
               [&](std::uint32_t t, DocId a, DocId b) { out.push_back(IndexedTriple{t, a, b}); });
  return out;
}

TrainingSet::IndexedTriple TrainingSet::resolve(const PositionalIndex& index, const Triple& triple) const {
  for (std::uint32_t t = 0; t < topics_.size(); ++t) {
    if (topics_[t].qid != triple.qid) continue;
    auto a = index.find_doc(triple.doc_a);
    auto b = index.find_doc(triple.doc_b);
    if (!a || !b) throw LookupError("triple references a document missing from the index");
    return IndexedTriple{t, *a, *b};
  }
  throw LookupError("unknown topic " + triple.qid);
}

namespace {

// Scores and gradients share work through "slots": one per distinct
// (term, document) pair touched by the batch, in first-touch order.
struct SlotTable {
  std::vector<std::pair<TermId, DocId>> keys;
  std::vector<std::uint32_t> slot_of;      // per (triple, side, query term)
  std::vector<std::size_t> triple_begin;   // offsets into slot_of, size n + 1
};

SlotTable build_slots(const TrainingSet& set, std::span<const TrainingSet::IndexedTriple> triples) {
  SlotTable table;
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  table.triple_begin.reserve(triples.size() + 1);
  table.triple_begin.push_back(0);
  auto slot = [&](TermId term, DocId doc) {
    const std::uint64_t key = (static_cast<std::uint64_t>(term) << 32) | doc;
    auto [it, inserted] = lookup.emplace(key, static_cast<std::uint32_t>(table.keys.size()));
    if (inserted) table.keys.emplace_back(term, doc);
    return it->second;
  };
  for (const auto& tr : triples) {
    const auto& terms = set.topics().at(tr.topic).terms;
    for (const auto& [term, mult] : terms) table.slot_of.push_back(slot(term, tr.a));
    for (const auto& [term, mult] : terms) table.slot_of.push_back(slot(term, tr.b));
    table.triple_begin.push_back(table.slot_of.size());
  }
  return table;
}

std::vector<double> slot_weights(const ScoringContext& ctx, const RankingModel& model, const SlotTable& table) {
  std::vector<double> w(table.keys.size());
  parallel_chunks(w.size(), kSlotChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) w[s] = model.weight(ctx, table.keys[s].first, table.keys[s].second);
  });
  return w;
}

// Returns the mean loss; fills upstream[slot] = dLoss/dw(slot) when given.
double accumulate_loss(const TrainingSet& set, std::span<const TrainingSet::IndexedTriple> triples,
                       const SlotTable& table, std::span<const double> w, std::vector<double>* upstream) {
  const double n = static_cast<double>(triples.size());
  double total = 0.0;
  if (upstream) upstream->assign(table.keys.size(), 0.0);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& terms = set.topics()[triples[i].topic].terms;
    const std::size_t base = table.triple_begin[i];
    const std::size_t m = terms.size();
    double s_a = 0.0;
    double s_b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s_a += terms[j].second * w[table.slot_of[base + j]];
      s_b += terms[j].second * w[table.slot_of[base + m + j]];
    }
    const double delta = s_a - s_b;
    total += ranknet_pair_loss(delta);
    if (upstream) {
      const double c = (sigmoid(delta) - 1.0) / n;
      for (std::size_t j = 0; j < m; ++j) {
        (*upstream)[table.slot_of[base + j]] += c * terms[j].second;
        (*upstream)[table.slot_of[base + m + j]] -= c * terms[j].second;
      }
    }
  }
  return total / n;
}

}  // namespace

double ranknet_loss(const ScoringContext& ctx, const RankingModel& model, const TrainingSet& set,
                    std::span<const TrainingSet::IndexedTriple> triples) {
  if (triples.empty()) return 0.0;
  const SlotTable table = build_slots(set, triples);
  const auto w = slot_weights(ctx, model, table);
  return accumulate_loss(set, triples, table, w, nullptr);
}

LossAndGradient ranknet_gradient(const ScoringContext& ctx, const RankingModel& model, const TrainingSet& set,
                                 std::span<const TrainingSet::IndexedTriple> triples) {
  const std::size_t p = model.num_parameters();
  LossAndGradient out;
  out.gradient.assign(p, 0.0);
  if (triples.empty()) return out;

  const SlotTable table = build_slots(set, triples);
  const auto w = slot_weights(ctx, model, table);
  std::vector<double> upstream;
  out.loss = accumulate_loss(set, triples, table, w, &upstream);
  if (p == 0) return out;

  const std::size_t slots = table.keys.size();
  const std::size_t chunks = chunk_count(slots, kSlotChunk);
  std::vector<double> partial(chunks * p, 0.0);
  parallel_chunks(slots, kSlotChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    std::span<double> g(partial.data() + chunk * p, p);
    for (std::size_t s = begin; s < end; ++s)
      if (upstream[s] != 0.0) model.weight_backward(ctx, table.keys[s].first, table.keys[s].second, upstream[s], g);
  });
  for (std::size_t c = 0; c < chunks; ++c)
    for (std::size_t i = 0; i < p; ++i) out.gradient[i] += partial[c * p + i];
  return out;
}

std::string parameter_hash(std::span<const double> params) {
  return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(double))));
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json line = {{"iter", r.iter}, {"loss", r.loss}, {"lr", r.lr}, {"params", r.params_hash}};
    if (r.wall_ms) line["wall_ms"] = *r.wall_ms;
    out += line.dump();
    out += "\n";
  }
  return out;
}

TrainResult train(const ScoringContext& ctx, RankingModel model, const TrainingSet& set, const TrainConfig& config,
                  const CheckpointCallback& on_checkpoint) {
  const double divergence_threshold = 10.0 * std::numbers::ln2;
  std::vector<double> params = model.parameters();
  AdamState state(params.size());
  AdamConfig adam{config.learning_rate, config.adam_beta1, config.adam_beta2, config.epsilon_for(model.variant())};

  std::optional<std::pair<std::vector<double>, AdamState>> snapshot;
  TrainLog log;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const auto triples = set.sample(config.triples_per_iteration, derive_seed(config.seed, iter));
    const std::size_t parts = std::min(config.minibatches, std::max<std::size_t>(1, triples.size()));
    double loss_sum = 0.0;
    for (std::size_t part = 0; part < parts; ++part) {
      const std::size_t begin = triples.size() * part / parts;
      const std::size_t end = triples.size() * (part + 1) / parts;
      const std::span<const TrainingSet::IndexedTriple> batch(triples.data() + begin, end - begin);

      model.set_parameters(params);
      LossAndGradient lg = ranknet_gradient(ctx, model, set, batch);
      while (!std::isfinite(lg.loss) || (snapshot && lg.loss > divergence_threshold)) {
        if (!snapshot || log.lr_halvings == kMaxLrHalvings)
          throw NumericError("training diverged at iteration " + std::to_string(iter) + " (loss " +
                             format_double(lg.loss) + ")");
        ++log.lr_halvings;
        adam.learning_rate /= 2.0;
        params = snapshot->first;
        state = snapshot->second;
        model.set_parameters(params);
        lg = ranknet_gradient(ctx, model, set, batch);
      }
      loss_sum += lg.loss;
      snapshot.emplace(params, state);
      adam_step(params, lg.gradient, state, adam);
    }

    TrainLog::Record record;
    record.iter = iter;
    record.loss = loss_sum / static_cast<double>(parts);
    record.lr = adam.learning_rate;
    record.params_hash = parameter_hash(params);
    if (config.record_wall_clock)
      record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    log.records.push_back(std::move(record));

    if (on_checkpoint && config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0) {
      model.set_parameters(params);
      on_checkpoint(iter + 1, model);
    }
  }
  model.set_parameters(params);
  return TrainResult{std::move(model), std::move(log)};
}

}  // namespace termweight
