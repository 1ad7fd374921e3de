#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termweight/clustering.hpp"
#include "termweight/evaluation.hpp"
#include "termweight/index.hpp"
#include "termweight/models.hpp"
#include "termweight/representation.hpp"
#include "termweight/synthetic.hpp"
#include "termweight/training.hpp"

namespace termweight {

/// An indexed collection with its topics and judgments.
struct Collection {
  PositionalIndex index;
  std::vector<Topic> topics;
  std::vector<QrelEntry> qrels;

  static Collection from_bundle(const SyntheticBundle& bundle, const TokenizerConfig& tokenizer = {});
};

struct ModelSpec {
  ModelVariant variant = ModelVariant::Mlp;
  Bm25Params bm25;  // fixed parameters, or the starting point of learned BM25
  std::size_t hidden = 50;
  Aggregation aggregation = Aggregation::Mean;
  std::uint64_t init_seed = 0;
};

struct ExperimentSettings {
  PositionConfig position;
  KMeansConfig kmeans;
  ModelSpec model;
  TrainConfig train;
  std::size_t cutoff = 1000;
  std::string tag = "run0";
  /// Size of the fixed triple sample used to report loss before and after
  /// training.
  std::size_t loss_probe_triples = 10'000;
};

struct ExperimentOutcome {
  EvalResult eval;
  std::vector<RunEntry> run;
  RankingModel model;
  TrainLog log;
  std::optional<ClusterModel> clusters;
  bool self_test = false;
  bool trained = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Ranks every topic and produces run entries tagged with `tag`.
std::vector<RunEntry> make_run(const ScoringContext& ctx, std::span<const Topic> topics, const RankingModel& model,
                               std::size_t cutoff, const std::string& tag);

/// Fits clusters and trains on `train`, then ranks and evaluates `test` with
/// test-side representations measured against the train-side centroids.
/// Passing the same collection twice is allowed and flagged as a self-test.
ExperimentOutcome cross_collection_experiment(const Collection& train, const Collection& test,
                                              const ExperimentSettings& settings);

RankingModel initial_model(const ModelSpec& spec, std::size_t k);

}  // namespace termweight
