#include "termweight/experiment.hpp"

#include "termweight/io.hpp"

namespace termweight {

Collection Collection::from_bundle(const SyntheticBundle& bundle, const TokenizerConfig& tokenizer) {
  return Collection{PositionalIndex::build(bundle.documents, tokenizer), bundle.topics, bundle.qrels};
}

std::vector<RunEntry> make_run(const ScoringContext& ctx, std::span<const Topic> topics, const RankingModel& model,
                               std::size_t cutoff, const std::string& tag) {
  std::vector<RunEntry> run;
  for (const auto& topic : topics) {
    const auto ranked = rank(ctx, topic.terms, model, cutoff);
    for (std::size_t r = 0; r < ranked.size(); ++r)
      run.push_back(RunEntry{topic.qid, ctx.index->docno(ranked[r].doc), r + 1, ranked[r].score, tag});
  }
  return run;
}

RankingModel initial_model(const ModelSpec& spec, std::size_t k) {
  switch (spec.variant) {
    case ModelVariant::Bm25:
      return RankingModel::bm25(spec.bm25);
    case ModelVariant::LearnedBm25:
      return RankingModel::learned_bm25(spec.bm25);
    case ModelVariant::Mlp:
      return RankingModel::mlp(k, spec.hidden, spec.init_seed);
  }
  return RankingModel::bm25(spec.bm25);
}

ExperimentOutcome cross_collection_experiment(const Collection& train, const Collection& test,
                                              const ExperimentSettings& settings) {
  ExperimentOutcome outcome;
  outcome.self_test = &train == &test || train.index.fingerprint() == test.index.fingerprint();

  std::optional<RepresentationStore> train_reps;
  std::optional<RepresentationStore> test_reps;
  if (settings.model.variant == ModelVariant::Mlp) {
    const auto points = collect_points(train.index, settings.position, settings.kmeans.sample_cap,
                                       derive_seed(settings.kmeans.seed, 0x5a));
    outcome.clusters = fit_kmeans(points, settings.kmeans);
    train_reps = RepresentationStore::build(train.index, *outcome.clusters, settings.model.aggregation);
    test_reps = outcome.self_test ? train_reps
                                  : RepresentationStore::build(test.index, *outcome.clusters, settings.model.aggregation);
  }

  outcome.model = initial_model(settings.model, settings.kmeans.k);
  const ScoringContext train_ctx(train.index, train_reps ? &*train_reps : nullptr);
  if (outcome.model.trainable()) {
    const auto set = TrainingSet::build(train.index, train.topics, train.qrels, settings.train.include_unjudged);
    const auto probe = set.sample(settings.loss_probe_triples, derive_seed(settings.train.seed, 0x9b0e));
    outcome.initial_loss = ranknet_loss(train_ctx, outcome.model, set, probe);
    auto result = termweight::train(train_ctx, outcome.model, set, settings.train);
    outcome.model = std::move(result.model);
    outcome.log = std::move(result.log);
    outcome.final_loss = ranknet_loss(train_ctx, outcome.model, set, probe);
    outcome.trained = true;
  }

  const ScoringContext test_ctx(test.index, test_reps ? &*test_reps : nullptr);
  outcome.run = make_run(test_ctx, test.topics, outcome.model, settings.cutoff, settings.tag);
  outcome.eval = map_score(outcome.run, test.qrels);
  return outcome;
}

}  // namespace termweight
