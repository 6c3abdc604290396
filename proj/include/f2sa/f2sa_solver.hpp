#pragma once

#include "f2sa/oracle.hpp"
#include "f2sa/solver.hpp"

namespace f2sa {

/// Double-loop fully first-order solver: T inner steps on (z, y) per outer
/// step on x, then the multiplier increment.
class F2saSolver {
 public:
  F2saSolver(const BilevelProblem& problem, ScheduleParams params, RunOptions options);

  const SolverState& state() const { return state_; }
  /// Direct access for tests that place the iterates at chosen points.
  SolverState& mutable_state() { return state_; }
  const ScheduleParams& params() const { return params_; }

  /// z <- z - gamma_k grad_y g(x_k, z; phi).
  void inner_z_step(int t);
  /// y <- y - alpha_k (grad_y f(x_k, y; zeta) + lambda_k grad_y g(x_k, y; phi)).
  void inner_y_step(int t);
  /// x <- x - xi alpha_k (grad_x f(x, y) + lambda_k (grad_x g(x, y) - grad_x g(x, z))).
  void outer_x_step();
  /// lambda_{k+1} = lambda_k + delta_k and k <- k + 1.
  void advance_schedule();
  /// One full outer iteration.
  void step();

  RunResult run();

 private:
  void check_inner(int t) const;

  const BilevelProblem& problem_;
  ScheduleParams params_;
  RunOptions options_;
  SolverState state_;
  RngStream rng_;
  Vector g1_, g2_, g3_;
};

RunResult f2sa_run(const BilevelProblem& problem, const ScheduleParams& params, const RunOptions& options);

}  // namespace f2sa
