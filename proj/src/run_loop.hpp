#pragma once

#include "f2sa/diagnostics.hpp"
#include "f2sa/error.hpp"
#include "f2sa/solver.hpp"

namespace f2sa::detail {

inline Vector initial_point(const std::optional<Vector>& v, int dim, const char* name) {
  if (!v) return Vector::Zero(dim);
  if (v->size() != dim) {
    throw InvalidArgument(std::string("initial ") + name + " has size " + std::to_string(v->size()) +
                          ", expected " + std::to_string(dim));
  }
  if (!v->allFinite()) throw InvalidArgument(std::string("initial ") + name + " is not finite");
  return *v;
}

inline std::vector<std::string> initial_warnings(const ScheduleState& s, const ScheduleParams& p,
                                                 const RegularityConstants& c) {
  std::vector<std::string> out;
  for (const auto& v : check_theorem_conditions(s, p, c)) out.push_back(v.describe());
  return out;
}

/// Shared outer loop: checkpoints at k = 0, cadence, 2 cadence, ... <= K.
/// The lower-level iterate z is the model whose dataset losses are reported.
template <class Solver>
RunResult run_loop(Solver& solver, const BilevelProblem& problem, const RunOptions& options, const char* name,
                   bool with_eta, bool check_schedule = true) {
  if (options.K < 0) throw InvalidArgument("iteration budget K must be nonnegative");
  RunResult res;
  res.trace.algorithm = name;
  res.trace.seed = options.seed;
  res.R = draw_evaluation_index(options.seed, options.K);
  if (check_schedule) res.warnings = initial_warnings(solver.state().schedule, solver.params(), problem.constants());
  const long cadence = effective_cadence(options.K, options.cadence);
  try {
    if (options.K > 0) {
      res.trace.rows.push_back(checkpoint_record(problem, solver.state(), solver.state().z, with_eta, options.grad_F));
    }
    for (long k = 1; k <= options.K; ++k) {
      solver.step();
      if (options.on_iteration) options.on_iteration(solver.state());
      if (k % cadence == 0) {
        res.trace.rows.push_back(
            checkpoint_record(problem, solver.state(), solver.state().z, with_eta, options.grad_F));
      }
    }
  } catch (const NumericFailure& e) {
    res.status = RunStatus::NumericFailure;
    res.message = e.what();
  }
  res.final_state = solver.state();
  return res;
}

}  // namespace f2sa::detail
