#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "termweight/experiment.hpp"

namespace termweight::cli {

struct ExperimentPaths {
  std::string docs;
  std::string topics;
  std::string qrels;
  /// Optional held-out collection. When absent, runs and evaluation use the
  /// training collection (self-test mode).
  std::string test_docs;
  std::string test_topics;
  std::string test_qrels;
  std::string workdir = "work";

  bool has_test() const { return !test_docs.empty(); }
};

struct Seeds {
  std::uint64_t clustering = 1;
  std::uint64_t init = 2;
  std::uint64_t training = 3;
  std::uint64_t synthetic = 4;
};

struct ExperimentConfig {
  ExperimentPaths paths;
  TokenizerConfig tokenizer;
  PositionConfig position;
  KMeansConfig clustering;
  Aggregation aggregation = Aggregation::Mean;
  ModelVariant variant = ModelVariant::Mlp;
  std::size_t hidden = 50;
  Bm25Params bm25;
  TrainConfig train;
  std::string tag = "run0";
  std::size_t cutoff = 1000;
  SyntheticSpec synthetic;
  Seeds seeds;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Sets every seed to `seed`.
  void override_seed(std::uint64_t seed);

  /// Hash of the canonical JSON form; embedded in every artifact.
  std::string hash() const;

  ExperimentSettings settings() const;
};

}  // namespace termweight::cli
