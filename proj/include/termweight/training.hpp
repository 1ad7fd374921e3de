#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "termweight/corpus.hpp"
#include "termweight/models.hpp"

namespace termweight {

/// (query, relevant document, non-relevant document).
struct Triple {
  std::string qid;
  std::string doc_a;
  std::string doc_b;

  bool operator==(const Triple&) const = default;
};

/// Uniform over topics that have at least one relevant and one judged
/// non-relevant document, then uniform within each class.
std::vector<Triple> sample_triples(std::span<const Topic> topics, std::span<const QrelEntry> qrels,
                                   std::size_t count, std::uint64_t seed);

struct TrainConfig {
  std::size_t iterations = 1000;
  std::size_t triples_per_iteration = 50'000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  /// Unset means 1e-4 for learned BM25 and 1e-8 for the MLP.
  std::optional<double> adam_epsilon;
  /// ADAM steps per iteration; each step uses an equal slice of the
  /// iteration's triples.
  std::size_t minibatches = 1;
  /// Draw non-relevant documents also from unjudged candidates.
  bool include_unjudged = false;
  std::size_t checkpoint_every = 0;
  bool record_wall_clock = false;
  std::uint64_t seed = 0;

  double epsilon_for(ModelVariant variant) const;
};

void to_json(nlohmann::json& j, const TrainConfig& config);
void from_json(const nlohmann::json& j, TrainConfig& config);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected ADAM update. Throws NumericError on a non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, const AdamConfig& config);

/// -log sigmoid(delta), evaluated as log(1 + exp(-delta)) without overflow.
double ranknet_pair_loss(double delta);

/// Topics and judgments resolved against one index.
class TrainingSet {
 public:
  struct TopicData {
    std::string qid;
    std::vector<std::pair<TermId, std::uint32_t>> terms;  // (term, multiplicity in the query)
    std::vector<DocId> relevant;
    std::vector<DocId> nonrelevant;
  };

  struct IndexedTriple {
    std::uint32_t topic = 0;
    DocId a = 0;
    DocId b = 0;
  };

  /// Judged documents missing from the index are dropped. Only topics with
  /// both classes non-empty can be sampled.
  static TrainingSet build(const PositionalIndex& index, std::span<const Topic> topics,
                           std::span<const QrelEntry> qrels, bool include_unjudged = false);

  const std::vector<TopicData>& topics() const { return topics_; }
  std::size_t num_valid_topics() const { return valid_.size(); }

  std::vector<IndexedTriple> sample(std::size_t count, std::uint64_t seed) const;
  IndexedTriple resolve(const PositionalIndex& index, const Triple& triple) const;

 private:
  std::vector<TopicData> topics_;
  std::vector<std::uint32_t> valid_;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean RankNet loss over the triples.
double ranknet_loss(const ScoringContext& ctx, const RankingModel& model, const TrainingSet& set,
                    std::span<const TrainingSet::IndexedTriple> triples);

/// Mean RankNet loss and its exact gradient with respect to
/// model.parameters().
LossAndGradient ranknet_gradient(const ScoringContext& ctx, const RankingModel& model, const TrainingSet& set,
                                 std::span<const TrainingSet::IndexedTriple> triples);

struct TrainLog {
  struct Record {
    std::size_t iter = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::string params_hash;
    std::optional<double> wall_ms;
  };
  std::vector<Record> records;
  std::size_t lr_halvings = 0;

  /// One JSON object per line: iter, loss, lr, params, and wall_ms when
  /// recorded.
  std::string to_jsonl() const;
};

struct TrainResult {
  RankingModel model;
  TrainLog log;
};

using CheckpointCallback = std::function<void(std::size_t iteration, const RankingModel& model)>;

/// Per iteration: fresh triples from a per-iteration seed, loss and gradient,
/// ADAM step(s). If the loss becomes non-finite or exceeds 10 ln 2 the last
/// parameter snapshot is restored and the learning rate halved, at most 5
/// times; after that NumericError is thrown.
TrainResult train(const ScoringContext& ctx, RankingModel model, const TrainingSet& set, const TrainConfig& config,
                  const CheckpointCallback& on_checkpoint = {});

/// Hash of the raw parameter bytes, used as a snapshot id.
std::string parameter_hash(std::span<const double> params);

}  // namespace termweight
