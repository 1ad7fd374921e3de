#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "termweight/cli/config.hpp"

namespace termweight::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kNumericFailure = 3 };

/// Fixed artifact names inside the workdir.
struct Workdir {
  std::filesystem::path root;

  std::filesystem::path train_index() const { return root / "train"; }
  std::filesystem::path test_index() const { return root / "test"; }
  std::filesystem::path clusters() const { return root / "clusters.model"; }
  std::filesystem::path clusters_csv() const { return root / "clusters.csv"; }
  std::filesystem::path train_reps() const { return root / "train" / "representations.bin"; }
  std::filesystem::path test_reps() const { return root / "test" / "representations.bin"; }
  std::filesystem::path checkpoint() const { return root / "checkpoint.model"; }
  std::filesystem::path periodic_checkpoint(std::size_t iter) const {
    return root / ("checkpoint-iter" + std::to_string(iter) + ".model");
  }
  std::filesystem::path train_log() const { return root / "train_log.jsonl"; }
  std::filesystem::path run() const { return root / "run.txt"; }
  std::filesystem::path run_meta() const { return root / "run.meta.json"; }
  std::filesystem::path eval() const { return root / "eval.json"; }
};

struct CommandOptions {
  bool force = false;
};

void cmd_synth(const ExperimentConfig& config, std::ostream& log);
void cmd_index(const ExperimentConfig& config, std::ostream& log);
void cmd_cluster(const ExperimentConfig& config, std::ostream& log);
void cmd_train(const ExperimentConfig& config, std::ostream& log);
void cmd_run(const ExperimentConfig& config, std::ostream& log);
/// Prints the EvalResult JSON on `out` and writes it to the workdir.
EvalResult cmd_eval(const ExperimentConfig& config, const CommandOptions& options, std::ostream& out, std::ostream& log);
void cmd_export_clusters(const ExperimentConfig& config, std::ostream& log);

/// Full command-line entry point. Diagnostics go to `err`; failures print a
/// single JSON line {"error": kind, "code": n, "message": text} there.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace termweight::cli
