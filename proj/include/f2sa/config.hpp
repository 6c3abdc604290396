#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "f2sa/hypercleaning.hpp"
#include "f2sa/oracle.hpp"
#include "f2sa/schedule.hpp"
#include "f2sa/solver.hpp"

namespace f2sa {

enum class Method { F2SA, F3SA, SOBO, NoBO };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// Dataset files for the hypercleaning problem. Relative paths are resolved
/// against the data root (see resolve_data_path).
struct DataFiles {
  std::string format = "idx";  // idx | csv
  std::string train;
  std::string train_labels;  // idx only
  std::string validation;
  std::string validation_labels;  // idx only
  int num_classes = 10;
  long n = 0;  // 0 keeps every example
  long m = 0;
  bool operator==(const DataFiles&) const = default;
};

struct ProblemConfig {
  std::string name = "scalar_quadratic";  // scalar_quadratic | quadratic | hypercleaning
  NoiseRegime regime = NoiseRegime::Deterministic;
  double sigma = 0.0;

  // scalar_quadratic
  double y_target = 0.0;
  double box = 2.0;

  // quadratic
  int dx = 2;
  int dy = 2;
  std::uint64_t seed = 1;
  double conditioning = 1.0;

  // hypercleaning
  HypercleaningSetup synthetic;
  std::optional<DataFiles> data;  // replaces the synthetic blobs when set
  double c = 0.01;
  std::string backend = "serial";
};

/// Step sizes of the SOBO and NoBO baselines.
struct BaselineConfig {
  double step_size = 0.1;
  int inner_steps = 10;
  double inner_step_size = 0.0;
};

struct ExperimentConfig {
  ProblemConfig problem;
  Method algorithm = Method::F2SA;
  ScheduleOverrides schedule;
  BaselineConfig baseline;
  long K = 1000;
  std::vector<std::uint64_t> seeds = {1};
  long cadence = 0;
  std::uint32_t batch = 1;
  bool share_x_token = false;
  GradFMode grad_F = GradFMode::Auto;
  std::optional<std::vector<double>> x0;
  std::string output_dir = "out";
};

/// Parses a JSON config. Syntax errors report line, column and byte offset;
/// schema errors report the JSON pointer of the offending value. Both throw
/// ConfigError; `origin` prefixes the message.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);
/// Canonical text: fixed key order, two-space indent, trailing newline.
std::string serialize_config(const ExperimentConfig& config);

/// `path` when absolute, otherwise joined to $F2SA_DATA_DIR (if set).
std::string resolve_data_path(const std::string& path);

/// Builds the problem a config describes.
std::unique_ptr<BilevelProblem> make_problem(const ProblemConfig& config);

}  // namespace f2sa
