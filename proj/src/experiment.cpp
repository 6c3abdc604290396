#include "f2sa/experiment.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "f2sa/error.hpp"
#include "f2sa/f2sa_solver.hpp"
#include "f2sa/f3sa_solver.hpp"
#include "f2sa/reference.hpp"

namespace f2sa {

using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string>& summary_fields() {
  static const std::vector<std::string> fields = {"lambda",     "alpha",  "gamma",  "eta",
                                                  "grad_F_norm_sq", "proxy_norm", "dist_y", "dist_z",
                                                  "train_loss", "val_loss", "potential"};
  return fields;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunResult run_single(const BilevelProblem& problem, const ExperimentConfig& config, std::uint64_t seed) {
  RunOptions run;
  run.K = config.K;
  run.seed = seed;
  run.cadence = config.cadence;
  run.batch = config.batch;
  run.share_x_token = config.share_x_token;
  run.grad_F = config.grad_F;
  if (config.x0) run.x0 = Eigen::Map<const Vector>(config.x0->data(), static_cast<long>(config.x0->size()));

  switch (config.algorithm) {
    case Method::F2SA:
      return f2sa_run(problem, default_params(Algorithm::F2SA, problem.noise_regime(), problem.constants(),
                                              config.schedule),
                      run);
    case Method::F3SA:
      return f3sa_run(problem, default_params(Algorithm::F3SA, problem.noise_regime(), problem.constants(),
                                              config.schedule),
                      run);
    case Method::SOBO: {
      SoboOptions o;
      o.step_size = config.baseline.step_size;
      o.inner_steps = config.baseline.inner_steps;
      o.inner_step_size = config.baseline.inner_step_size;
      o.run = run;
      return sobo_baseline_run(problem, o);
    }
    case Method::NoBO: {
      NoboOptions o;
      o.step_size = config.baseline.inner_step_size;
      o.run = run;
      return nobo_baseline_run(problem, o);
    }
  }
  throw InvalidArgument("unknown algorithm");
}

std::vector<CheckpointSummary> summarize_traces(const std::vector<Trace>& traces) {
  std::vector<CheckpointSummary> out;
  if (traces.empty()) return out;
  std::size_t rows = traces.front().rows.size();
  for (const auto& t : traces) rows = std::min(rows, t.rows.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const long k = traces.front().rows[i].k;
    for (const auto& t : traces) {
      if (t.rows[i].k != k) throw DataError("traces disagree on the checkpoint grid at row " + std::to_string(i));
    }
    CheckpointSummary cs;
    cs.k = k;
    for (const auto& name : summary_fields()) {
      std::vector<double> values;
      for (const auto& t : traces) {
        if (auto v = t.rows[i].field(name)) values.push_back(*v);
      }
      if (values.empty()) continue;
      cs.fields.emplace(name, field_stat(values));
    }
    out.push_back(std::move(cs));
  }
  return out;
}

std::string summary_to_json(const ExperimentSummary& s) {
  json j;
  j["algorithm"] = s.algorithm;
  j["runs"] = s.runs;
  j["failures"] = s.failures;
  json seeds = json::array();
  for (const auto& o : s.seeds) {
    json e;
    e["seed"] = o.seed;
    e["status"] = o.status == RunStatus::Ok ? "ok" : "numeric_failure";
    e["message"] = o.message;
    e["R"] = o.R;
    e["trace"] = o.trace_path;
    e["warnings"] = o.warnings;
    e["final_grad_F_norm_sq"] = optional_number(o.final_grad_F_norm_sq);
    e["final_val_loss"] = optional_number(o.final_val_loss);
    seeds.push_back(std::move(e));
  }
  j["seeds"] = std::move(seeds);
  json cps = json::array();
  for (const auto& c : s.checkpoints) {
    json e;
    e["k"] = c.k;
    for (const auto& [name, st] : c.fields) {
      e[name] = {{"mean", st.mean}, {"stderr", st.std_error}, {"count", st.count}};
    }
    cps.push_back(std::move(e));
  }
  j["checkpoints"] = std::move(cps);
  return j.dump(2) + "\n";
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const auto problem = make_problem(config.problem);
  const std::string alg(to_string(config.algorithm));
  fs::create_directories(config.output_dir);

  ExperimentSummary summary;
  summary.algorithm = alg;
  summary.runs = static_cast<long>(config.seeds.size());
  summary.seeds.resize(config.seeds.size());
  std::vector<RunResult> results(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());

  const long n = static_cast<long>(config.seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      results[i] = run_single(*problem, config, config.seeds[i]);
      const fs::path path = fs::path(config.output_dir) / (alg + "_seed" + std::to_string(config.seeds[i]) + ".csv");
      write_trace_csv(results[i].trace, path.string());
      summary.seeds[i].trace_path = path.string();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<Trace> ok;
  for (std::size_t i = 0; i < results.size(); ++i) {
    SeedOutcome& o = summary.seeds[i];
    const RunResult& r = results[i];
    o.seed = config.seeds[i];
    o.status = r.status;
    o.message = r.message;
    o.R = r.R;
    o.warnings = r.warnings;
    if (!r.trace.rows.empty()) {
      o.final_grad_F_norm_sq = r.trace.rows.back().grad_F_norm_sq;
      o.final_val_loss = r.trace.rows.back().val_loss;
    }
    if (r.status == RunStatus::Ok) {
      ok.push_back(r.trace);
    } else {
      ++summary.failures;
    }
  }
  summary.checkpoints = summarize_traces(ok);

  std::ofstream out(fs::path(config.output_dir) / "summary.json");
  if (!out) throw DataError("cannot write summary.json in " + config.output_dir);
  out << summary_to_json(summary);
  return summary;
}

}  // namespace f2sa
