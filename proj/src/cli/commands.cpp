#include "termweight/cli/commands.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "termweight/errors.hpp"
#include "termweight/io.hpp"
#include "termweight/parallel.hpp"

namespace termweight::cli {
namespace {

void require_file(const std::filesystem::path& path) {
  if (path.empty()) throw DataError("a required path is not set in the config");
  if (!std::filesystem::exists(path)) throw DataError("missing " + path.string());
}

std::uint64_t hash_value(const std::string& hex) { return std::stoull(hex, nullptr, 16); }

struct Side {
  std::string docs;
  std::string topics;
  std::string qrels;
  std::filesystem::path index_dir;
  std::filesystem::path reps;
};

Side train_side(const ExperimentConfig& c) {
  Workdir w{c.paths.workdir};
  return Side{c.paths.docs, c.paths.topics, c.paths.qrels, w.train_index(), w.train_reps()};
}

// The collection runs are scored and evaluated on.
Side eval_side(const ExperimentConfig& c) {
  if (!c.paths.has_test()) return train_side(c);
  Workdir w{c.paths.workdir};
  return Side{c.paths.test_docs, c.paths.test_topics, c.paths.test_qrels, w.test_index(), w.test_reps()};
}

PositionalIndex load_index(const std::filesystem::path& dir) {
  require_file(dir / kIndexManifestFile);
  return PositionalIndex::load(dir);
}

std::vector<Topic> load_topics(const std::string& path, const TokenizerConfig& tokenizer) {
  require_file(path);
  return parse_topics(read_file(path), tokenizer);
}

std::vector<QrelEntry> load_qrels(const std::string& path) {
  require_file(path);
  return parse_qrels(read_file(path));
}

ClusterModel load_clusters(const ExperimentConfig& c, std::string* hash = nullptr) {
  const auto path = Workdir{c.paths.workdir}.clusters();
  require_file(path);
  return parse_cluster_model(read_file(path), hash);
}

std::optional<RepresentationStore> load_reps(const ExperimentConfig& c, const std::filesystem::path& path,
                                             const PositionalIndex& index) {
  if (c.variant != ModelVariant::Mlp) return std::nullopt;
  require_file(path);
  auto store = RepresentationStore::parse(read_file(path));
  store.check_compatible(index);
  return store;
}

}  // namespace

void cmd_synth(const ExperimentConfig& c, std::ostream& log) {
  auto write_bundle = [&](const SyntheticBundle& b, const std::string& docs, const std::string& topics,
                          const std::string& qrels) {
    if (docs.empty() || topics.empty() || qrels.empty()) throw ConfigError("synth needs docs, topics and qrels paths");
    write_file_atomic(docs, format_trec_documents(b.documents));
    write_file_atomic(topics, format_topics(b.topics));
    write_file_atomic(qrels, format_qrels(b.qrels));
    log << "[synth] " << b.documents.size() << " documents, " << b.topics.size() << " topics -> " << docs << "\n";
  };
  SyntheticSpec spec = c.synthetic;
  spec.seed = c.seeds.synthetic;
  write_bundle(generate_synthetic(spec), c.paths.docs, c.paths.topics, c.paths.qrels);
  if (c.paths.has_test()) {
    spec.seed = derive_seed(c.seeds.synthetic, 1);
    write_bundle(generate_synthetic(spec), c.paths.test_docs, c.paths.test_topics, c.paths.test_qrels);
  }
}

void cmd_index(const ExperimentConfig& c, std::ostream& log) {
  require_file(c.paths.docs);
  if (c.paths.has_test()) require_file(c.paths.test_docs);
  auto build = [&](const std::string& docs, const std::filesystem::path& dir) {
    const auto documents = parse_trec_documents(read_file(docs));
    const auto index = PositionalIndex::build(documents, c.tokenizer);
    index.save(dir, c.hash());
    log << "[index] " << index.num_docs() << " documents, " << index.num_terms() << " terms, "
        << index.num_postings() << " postings -> " << dir.string() << "\n";
  };
  build(c.paths.docs, train_side(c).index_dir);
  if (c.paths.has_test()) build(c.paths.test_docs, eval_side(c).index_dir);
}

void cmd_cluster(const ExperimentConfig& c, std::ostream& log) {
  const Workdir w{c.paths.workdir};
  const auto train_index = load_index(w.train_index());
  const auto settings = c.settings();
  const auto points =
      collect_points(train_index, settings.position, settings.kmeans.sample_cap, derive_seed(settings.kmeans.seed, 0x5a));
  log << "[cluster] " << points.rows() << " distinct vectors (" << points.total_weight() << " points)\n";
  const auto model = fit_kmeans(points, settings.kmeans);
  write_file_atomic(w.clusters(), serialize_cluster_model(model, c.hash()));
  log << "[cluster] k=" << model.k() << " inertia=" << format_double(model.inertia) << " after " << model.iterations
      << " iterations\n";

  const std::uint64_t tag = hash_value(c.hash());
  write_file_atomic(w.train_reps(), RepresentationStore::build(train_index, model, c.aggregation).serialize(tag));
  if (c.paths.has_test()) {
    const auto test_index = load_index(w.test_index());
    write_file_atomic(w.test_reps(), RepresentationStore::build(test_index, model, c.aggregation).serialize(tag));
  }
}

void cmd_train(const ExperimentConfig& c, std::ostream& log) {
  const Workdir w{c.paths.workdir};
  const auto side = train_side(c);
  const auto index = load_index(side.index_dir);
  const auto topics = load_topics(side.topics, index.tokenizer());
  const auto qrels = load_qrels(side.qrels);
  const auto settings = c.settings();

  std::optional<ClusterModel> clusters;
  if (c.variant == ModelVariant::Mlp) clusters = load_clusters(c);
  const auto reps = load_reps(c, side.reps, index);
  const std::size_t k = clusters ? clusters->k() : settings.kmeans.k;

  nlohmann::json metadata = {{"config_hash", c.hash()}, {"train", settings.train}, {"seeds", c.to_json()["seeds"]},
                             {"k", k},  {"dimension", c.position.dimension},   {"normalize", c.position.normalize},
                             {"aggregation", to_string(c.aggregation)}};

  RankingModel model = initial_model(settings.model, k);
  TrainLog train_log;
  if (model.trainable()) {
    const ScoringContext ctx(index, reps ? &*reps : nullptr);
    const auto set = TrainingSet::build(index, topics, qrels, settings.train.include_unjudged);
    auto result = train(ctx, model, set, settings.train, [&](std::size_t iter, const RankingModel& snapshot) {
      write_file_atomic(w.periodic_checkpoint(iter), serialize_checkpoint(snapshot, metadata));
    });
    model = std::move(result.model);
    train_log = std::move(result.log);
    if (!train_log.records.empty())
      log << "[train] " << train_log.records.size() << " iterations, final loss "
          << format_double(train_log.records.back().loss) << "\n";
  } else {
    log << "[train] fixed BM25, nothing to train\n";
  }
  const std::string log_bytes =
      nlohmann::json{{"config_hash", c.hash()}, {"variant", to_string(c.variant)}}.dump() + "\n" + train_log.to_jsonl();
  metadata["train_log_fnv1a64"] = hex64(fnv1a64(log_bytes));
  write_file_atomic(w.train_log(), log_bytes);
  write_file_atomic(w.checkpoint(), serialize_checkpoint(model, metadata));
}

void cmd_run(const ExperimentConfig& c, std::ostream& log) {
  const Workdir w{c.paths.workdir};
  const auto side = eval_side(c);
  const auto index = load_index(side.index_dir);
  const auto topics = load_topics(side.topics, index.tokenizer());
  require_file(w.checkpoint());
  nlohmann::json header;
  const auto model = parse_checkpoint(read_file(w.checkpoint()), &header);
  if (model.variant() != c.variant) throw DataError("checkpoint variant does not match the config");
  const auto reps = load_reps(c, side.reps, index);
  const ScoringContext ctx(index, reps ? &*reps : nullptr);
  const auto run = make_run(ctx, topics, model, c.cutoff, c.tag);
  write_run(w.run(), run);
  const nlohmann::json meta = {{"config_hash", c.hash()},
                               {"checkpoint_config_hash", header["metadata"].value("config_hash", "")},
                               {"self_test", !c.paths.has_test()},
                               {"tag", c.tag},
                               {"run_fnv1a64", hex64(fnv1a64(format_run(run)))}};
  write_file_atomic(w.run_meta(), meta.dump(1) + "\n");
  log << "[run] " << run.size() << " entries for " << topics.size() << " topics -> " << w.run().string() << "\n";
}

EvalResult cmd_eval(const ExperimentConfig& c, const CommandOptions& options, std::ostream& out, std::ostream& log) {
  const Workdir w{c.paths.workdir};
  require_file(w.run());
  require_file(w.run_meta());
  const auto side = eval_side(c);
  const auto qrels = load_qrels(side.qrels);
  const auto meta = nlohmann::json::parse(read_file(w.run_meta()));
  const std::string expected = c.hash();
  for (const char* key : {"config_hash", "checkpoint_config_hash"}) {
    const std::string found = meta.value(key, "");
    if (found != expected && !options.force)
      throw DataError("artifact chain mismatch: " + std::string(key) + " " + found + " != config " + expected +
                      " (use --force to evaluate anyway)");
  }
  const auto run = read_run(w.run());
  const auto result = map_score(run, qrels);
  auto j = result.to_json();
  j["config_hash"] = expected;
  j["self_test"] = !c.paths.has_test();
  write_file_atomic(w.eval(), j.dump(1) + "\n");
  out << j.dump() << "\n";
  if (!c.paths.has_test()) log << "[eval] warning: self-test mode, evaluated on the training collection\n";
  return result;
}

void cmd_export_clusters(const ExperimentConfig& c, std::ostream& log) {
  const Workdir w{c.paths.workdir};
  const auto model = load_clusters(c);
  write_file_atomic(w.clusters_csv(), export_clusters(model));
  log << "[export-clusters] " << model.k() << " clusters -> " << w.clusters_csv().string() << "\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned term weighting from occurrence positions"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
  bool force = false;
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)");
  app.add_option("--seed", seed, "Override every seed in the config");
  app.add_flag("--force", force, "Evaluate even if artifact config hashes differ");

  bool defaults = false;
  auto* config_cmd = app.add_subcommand("config", "Print the resolved config, or the defaults");
  config_cmd->add_flag("--defaults", defaults, "Print the default config");
  for (const char* name : {"index", "cluster", "train", "run", "eval", "export-clusters", "synth"})
    app.add_subcommand(name);

  auto fail = [&](const char* kind, int code, const std::string& message) {
    err << nlohmann::json{{"error", kind}, {"code", code}, {"message", message}}.dump() << "\n";
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    return fail("usage", kUsageError, e.what());
  }

  try {
    set_thread_count(threads);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "config" && defaults) {
      out << ExperimentConfig{}.to_json().dump(2) << "\n";
      return kSuccess;
    }
    if (config_path.empty()) return fail("usage", kUsageError, "--config is required for '" + name + "'");
    ExperimentConfig config = ExperimentConfig::load(config_path);
    if (seed) config.override_seed(*seed);

    if (name == "config") {
      auto j = config.to_json();
      out << j.dump(2) << "\n";
      err << "config_hash " << config.hash() << "\n";
    } else if (name == "synth") {
      cmd_synth(config, err);
    } else if (name == "index") {
      cmd_index(config, err);
    } else if (name == "cluster") {
      cmd_cluster(config, err);
    } else if (name == "train") {
      cmd_train(config, err);
    } else if (name == "run") {
      cmd_run(config, err);
    } else if (name == "eval") {
      cmd_eval(config, CommandOptions{force}, out, err);
    } else if (name == "export-clusters") {
      cmd_export_clusters(config, err);
    }
    return kSuccess;
  } catch (const ConfigError& e) {
    return fail("usage", kUsageError, e.what());
  } catch (const NumericError& e) {
    return fail("numeric", kNumericFailure, e.what());
  } catch (const Error& e) {
    return fail("data", kDataError, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("data", kDataError, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail("data", kDataError, e.what());
  }
}

}  // namespace termweight::cli
