#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "f2sa/analysis.hpp"
#include "f2sa/config.hpp"
#include "f2sa/solver.hpp"

namespace f2sa {

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Ok;
  std::string message;
  long R = -1;
  std::string trace_path;
  std::vector<std::string> warnings;
  std::optional<double> final_grad_F_norm_sq;
  std::optional<double> final_val_loss;
};

struct CheckpointSummary {
  long k = 0;
  std::map<std::string, FieldStat> fields;
};

struct ExperimentSummary {
  std::string algorithm;
  long runs = 0;      // seeds attempted
  long failures = 0;  // seeds that ended in a numeric failure
  std::vector<SeedOutcome> seeds;
  std::vector<CheckpointSummary> checkpoints;  // over successful seeds

  bool all_failed() const { return runs > 0 && failures == runs; }
};

/// Runs one algorithm over all configured seeds (in parallel), writes
/// <output_dir>/<algorithm>_seed<seed>.csv per seed and
/// <output_dir>/summary.json. An empty seed list still writes a summary.
ExperimentSummary run_experiment(const ExperimentConfig& config);

/// Single seed, no file output.
RunResult run_single(const BilevelProblem& problem, const ExperimentConfig& config, std::uint64_t seed);

/// Seed mean and stderr of every numeric trace field at each checkpoint shared
/// by all traces.
std::vector<CheckpointSummary> summarize_traces(const std::vector<Trace>& traces);

std::string summary_to_json(const ExperimentSummary& summary);

}  // namespace f2sa
