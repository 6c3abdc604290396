// f2sa command line: run experiments, run the verification suite, fit rates
// and emit plot data.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "f2sa/analysis.hpp"
#include "f2sa/config.hpp"
#include "f2sa/error.hpp"
#include "f2sa/experiment.hpp"
#include "f2sa/verification.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumeric = 2, kData = 3 };

int cmd_run(const std::string& path, const std::string& out_override) {
  f2sa::ExperimentConfig cfg = f2sa::load_config(path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (cfg.seeds.empty()) {
    f2sa::run_experiment(cfg);
    std::cerr << "error: config lists no seeds; summary written with zero runs\n";
    return kConfig;
  }
  const f2sa::ExperimentSummary s = f2sa::run_experiment(cfg);
  for (const auto& o : s.seeds) {
    std::cout << s.algorithm << " seed " << o.seed << ": "
              << (o.status == f2sa::RunStatus::Ok ? "ok" : "numeric failure (" + o.message + ")");
    if (o.final_grad_F_norm_sq) std::cout << "  grad_F_norm_sq=" << *o.final_grad_F_norm_sq;
    if (o.final_val_loss) std::cout << "  val_loss=" << *o.final_val_loss;
    std::cout << "  R=" << o.R << "\n";
    for (const auto& w : o.warnings) std::cout << "  warning: " << w << "\n";
  }
  std::cout << "wrote " << s.runs << " trace(s) and summary.json to " << cfg.output_dir << "\n";
  return s.all_failed() ? kNumeric : kOk;
}

int cmd_verify() {
  bool ok = true;
  for (const auto& r : f2sa::run_reference_suite()) {
    std::printf("%-4s %-40s worst=%.3e limit=%.3e cases=%ld violations=%ld %s\n", r.passed ? "ok" : "FAIL",
                r.name.c_str(), r.worst, r.limit, r.cases, r.violations, r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kOk : kNumeric;
}

std::vector<f2sa::Trace> read_traces(const std::vector<std::string>& paths) {
  std::vector<f2sa::Trace> traces;
  for (const auto& p : paths) traces.push_back(f2sa::read_trace_csv(p));
  return traces;
}

int cmd_fit(const std::string& field, long kmin, long kmax, const std::vector<std::string>& paths) {
  const f2sa::RateFit f = f2sa::fit_rate(read_traces(paths), kmin, kmax, field);
  std::printf("slope=%.6f intercept=%.6f r2=%.6f points=%ld\n", f.slope, f.intercept, f.r2, f.points);
  return kOk;
}

int cmd_plot(const std::string& out, const std::vector<std::string>& fields, const std::vector<std::string>& paths) {
  f2sa::emit_plot_data(read_traces(paths), fields, out);
  std::cout << "wrote " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order stochastic bilevel solvers and experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  auto* run = app.add_subcommand("run", "Run an experiment config over its seeds");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_override, "Override the config's output_dir");

  auto* verify = app.add_subcommand("verify", "Run the reference property suite");

  std::string field = "grad_F_norm_sq";
  long kmin = 0, kmax = 0;
  std::vector<std::string> fit_paths;
  auto* fit = app.add_subcommand("fit", "Fit a log-log slope to seed-averaged trace values");
  fit->add_option("--field", field, "Trace column")->capture_default_str();
  fit->add_option("--kmin", kmin, "First checkpoint in the window")->required();
  fit->add_option("--kmax", kmax, "Last checkpoint in the window")->required();
  fit->add_option("traces", fit_paths, "Trace CSV files")->required();

  std::string plot_out;
  std::vector<std::string> plot_fields, plot_paths;
  auto* plot = app.add_subcommand("plot", "Write wide-format seed-mean/stderr CSV");
  plot->add_option("--out", plot_out, "Output CSV path")->required();
  plot->add_option("--field", plot_fields, "Trace column (repeatable; default grad_F_norm_sq)")
      ->allow_extra_args(false);
  plot->add_option("traces", plot_paths, "Trace CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config_path, out_override);
    if (*verify) return cmd_verify();
    if (*fit) return cmd_fit(field, kmin, kmax, fit_paths);
    if (*plot) {
      if (plot_fields.empty()) plot_fields.push_back("grad_F_norm_sq");
      return cmd_plot(plot_out, plot_fields, plot_paths);
    }
  } catch (const f2sa::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const f2sa::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const f2sa::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const f2sa::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
