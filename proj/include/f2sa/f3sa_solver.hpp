#pragma once

#include "f2sa/oracle.hpp"
#include "f2sa/solver.hpp"

namespace f2sa {

/// Momentum-assisted estimators and the points of the previous iteration.
struct MomentumState {
  Vector h_z, h_fy, h_gy, h_fx, h_gxy, h_gxz;
  Vector prev_x, prev_y, prev_z;  // x_{k-1}, y_{k-1}, z_{k-1}
  bool initialized = false;
};

/// fresh_current + (1 - eta) (buffer - fresh_previous). Both fresh gradients
/// must come from the same sample. Throws InvalidArgument unless eta is in (0, 1].
Vector momentum_update(const Vector& buffer, const Vector& fresh_current, const Vector& fresh_previous, double eta);

/// Single-loop solver with recursive momentum estimators for all six
/// gradient channels.
class F3saSolver {
 public:
  F3saSolver(const BilevelProblem& problem, ScheduleParams params, RunOptions options);

  const SolverState& state() const { return state_; }
  SolverState& mutable_state() { return state_; }
  const MomentumState& momentum() const { return momentum_; }
  const ScheduleParams& params() const { return params_; }

  /// Updates z, then y, then x, then the multiplier and momentum weight.
  void step();

  RunResult run();

 private:
  void refresh(Vector& buffer, Channel which, const Vector& x_cur, const Vector& y_cur, const Vector& x_prev,
               const Vector& y_prev, const SampleToken& token, double eta);

  const BilevelProblem& problem_;
  ScheduleParams params_;
  RunOptions options_;
  SolverState state_;
  MomentumState momentum_;
  RngStream rng_;
  Vector cur_, prev_;
};

RunResult f3sa_run(const BilevelProblem& problem, const ScheduleParams& params, const RunOptions& options);

}  // namespace f2sa
