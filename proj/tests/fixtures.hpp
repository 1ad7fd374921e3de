// Small end-to-end setups shared by the unit tests.
#pragma once

#include <memory>

#include "termweight/clustering.hpp"
#include "termweight/index.hpp"
#include "termweight/models.hpp"
#include "termweight/representation.hpp"
#include "termweight/synthetic.hpp"
#include "termweight/training.hpp"

namespace termweight::testing {

inline SyntheticSpec small_spec(SyntheticPattern pattern, std::uint64_t seed) {
  return SyntheticSpec{.vocabulary_size = 40,
                       .num_queries = 4,
                       .relevant_per_query = 6,
                       .nonrelevant_per_query = 6,
                       .doc_length = 40,
                       .query_tf = 4,
                       .pattern = pattern,
                       .seed = seed};
}

/// Index, clusters, representations and training set for one bundle. Held by
/// pointer because the scoring context keeps references into it.
struct World {
  SyntheticBundle bundle;
  PositionalIndex index;
  ClusterModel clusters;
  RepresentationStore reps;
  TrainingSet set;

  ScoringContext context() const { return ScoringContext(index, &reps); }

  static std::unique_ptr<World> make(const SyntheticSpec& spec, std::size_t k = 3, std::size_t dimension = 8) {
    auto w = std::make_unique<World>();
    w->bundle = generate_synthetic(spec);
    w->index = PositionalIndex::build(w->bundle.documents, {});
    const PositionConfig position{dimension, true};
    w->clusters = fit_kmeans(collect_points(w->index, position, 1'000'000, spec.seed), KMeansConfig{.k = k, .seed = 1});
    w->reps = RepresentationStore::build(w->index, w->clusters, Aggregation::Mean);
    w->set = TrainingSet::build(w->index, w->bundle.topics, w->bundle.qrels);
    return w;
  }
};

}  // namespace termweight::testing
