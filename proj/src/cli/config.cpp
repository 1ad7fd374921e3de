#include "termweight/cli/config.hpp"

#include <set>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"

namespace termweight::cli {
namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json clustering_json = clustering;
  clustering_json.erase("seed");
  nlohmann::json train_json = train;
  train_json.erase("seed");
  nlohmann::json synthetic_json = synthetic;
  synthetic_json.erase("seed");
  return nlohmann::json{
      {"paths",
       {{"docs", paths.docs},
        {"topics", paths.topics},
        {"qrels", paths.qrels},
        {"test_docs", paths.test_docs},
        {"test_topics", paths.test_topics},
        {"test_qrels", paths.test_qrels},
        {"workdir", paths.workdir}}},
      {"tokenizer", tokenizer},
      {"position", position},
      {"clustering", clustering_json},
      {"aggregation", to_string(aggregation)},
      {"model", {{"variant", to_string(variant)}, {"hidden", hidden}, {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}}}},
      {"train", train_json},
      {"run", {{"tag", tag}, {"cutoff", cutoff}}},
      {"synthetic", synthetic_json},
      {"seeds",
       {{"clustering", seeds.clustering},
        {"init", seeds.init},
        {"training", seeds.training},
        {"synthetic", seeds.synthetic}}},
  };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"paths", "tokenizer", "position", "clustering", "aggregation", "model", "train", "run", "synthetic",
                    "seeds"},
                   "config");
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      reject_unknown(p, {"docs", "topics", "qrels", "test_docs", "test_topics", "test_qrels", "workdir"}, "paths");
      read_if(p, "docs", c.paths.docs);
      read_if(p, "topics", c.paths.topics);
      read_if(p, "qrels", c.paths.qrels);
      read_if(p, "test_docs", c.paths.test_docs);
      read_if(p, "test_topics", c.paths.test_topics);
      read_if(p, "test_qrels", c.paths.test_qrels);
      read_if(p, "workdir", c.paths.workdir);
      if (c.paths.has_test() && (c.paths.test_topics.empty() || c.paths.test_qrels.empty()))
        throw ConfigError("test_docs requires test_topics and test_qrels");
    }
    if (j.contains("tokenizer")) reject_unknown(j.at("tokenizer"), {"lowercase", "stopwords"}, "tokenizer");
    if (j.contains("position")) reject_unknown(j.at("position"), {"dimension", "normalize"}, "position");
    if (j.contains("clustering"))
      reject_unknown(j.at("clustering"), {"k", "max_iter", "rel_tol", "n_init", "sample_cap"}, "clustering");
    if (j.contains("train"))
      reject_unknown(j.at("train"),
                     {"iterations", "triples_per_iteration", "learning_rate", "adam_beta1", "adam_beta2",
                      "adam_epsilon", "minibatches", "include_unjudged", "checkpoint_every", "record_wall_clock"},
                     "train");
    if (j.contains("synthetic"))
      reject_unknown(j.at("synthetic"),
                     {"vocabulary_size", "num_queries", "relevant_per_query", "nonrelevant_per_query", "doc_length",
                      "query_tf", "pattern"},
                     "synthetic");
    read_if(j, "tokenizer", c.tokenizer);
    read_if(j, "position", c.position);
    read_if(j, "clustering", c.clustering);
    if (j.contains("aggregation")) c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
    if (j.contains("model")) {
      const auto& m = j.at("model");
      reject_unknown(m, {"variant", "hidden", "bm25"}, "model");
      if (m.contains("variant")) c.variant = variant_from_string(m.at("variant").get<std::string>());
      read_if(m, "hidden", c.hidden);
      if (m.contains("bm25")) {
        reject_unknown(m.at("bm25"), {"k1", "b"}, "model.bm25");
        read_if(m.at("bm25"), "k1", c.bm25.k1);
        read_if(m.at("bm25"), "b", c.bm25.b);
      }
      c.bm25.validate();
      if (c.hidden == 0) throw ConfigError("hidden must be >= 1");
    }
    read_if(j, "train", c.train);
    if (j.contains("run")) {
      reject_unknown(j.at("run"), {"tag", "cutoff"}, "run");
      read_if(j.at("run"), "tag", c.tag);
      read_if(j.at("run"), "cutoff", c.cutoff);
      if (c.cutoff == 0) throw ConfigError("run cutoff must be >= 1");
      if (c.tag.empty() || c.tag.find_first_of(" \t\n") != std::string::npos)
        throw ConfigError("run tag must be a non-empty word");
    }
    read_if(j, "synthetic", c.synthetic);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      reject_unknown(s, {"clustering", "init", "training", "synthetic"}, "seeds");
      read_if(s, "clustering", c.seeds.clustering);
      read_if(s, "init", c.seeds.init);
      read_if(s, "training", c.seeds.training);
      read_if(s, "synthetic", c.seeds.synthetic);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.clustering.seed = c.seeds.clustering;
  c.train.seed = c.seeds.training;
  c.synthetic.seed = c.seeds.synthetic;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  seeds = Seeds{seed, seed, seed, seed};
  clustering.seed = seed;
  train.seed = seed;
  synthetic.seed = seed;
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

ExperimentSettings ExperimentConfig::settings() const {
  ExperimentSettings s;
  s.position = position;
  s.kmeans = clustering;
  s.kmeans.seed = seeds.clustering;
  s.model = ModelSpec{variant, bm25, hidden, aggregation, seeds.init};
  s.train = train;
  s.train.seed = seeds.training;
  s.cutoff = cutoff;
  s.tag = tag;
  return s;
}

}  // namespace termweight::cli
