#include "f2sa/f2sa_solver.hpp"

#include "f2sa/error.hpp"
#include "run_loop.hpp"

namespace f2sa {

F2saSolver::F2saSolver(const BilevelProblem& problem, ScheduleParams params, RunOptions options)
    : problem_(problem), params_(params), options_(std::move(options)), rng_(options_.seed) {
  params_.validate();
  if (options_.batch == 0) throw InvalidArgument("batch size must be positive");
  state_.x = detail::initial_point(options_.x0, problem.dim_x(), "x");
  state_.y = detail::initial_point(options_.y0, problem.dim_y(), "y");
  state_.z = detail::initial_point(options_.z0, problem.dim_y(), "z");
  state_.schedule = make_schedule(params_, problem.constants());
  state_.k = 0;
}

void F2saSolver::check_inner(int t) const {
  if (t < 0 || t >= params_.T) {
    throw PreconditionViolation("inner step index " + std::to_string(t) + " outside [0, T)");
  }
}

void F2saSolver::inner_z_step(int t) {
  check_inner(t);
  const SampleToken phi = draw_token(rng_, options_.batch);
  eval_grad_into(problem_, Channel::gy, state_.x, state_.z, &phi, g1_);
  state_.z.noalias() -= state_.schedule.gamma * g1_;
  guard_iterate(state_.z, "z", state_.k, t);
}

void F2saSolver::inner_y_step(int t) {
  check_inner(t);
  const SampleToken zeta = draw_token(rng_, options_.batch);
  const SampleToken phi = draw_token(rng_, options_.batch);
  eval_grad_into(problem_, Channel::fy, state_.x, state_.y, &zeta, g1_);
  eval_grad_into(problem_, Channel::gy, state_.x, state_.y, &phi, g2_);
  const ScheduleState& s = state_.schedule;
  state_.y.noalias() -= s.alpha * (g1_ + s.lambda * g2_);
  guard_iterate(state_.y, "y", state_.k, t);
}

void F2saSolver::outer_x_step() {
  const SampleToken zeta = draw_token(rng_, options_.batch);
  const SampleToken phi = draw_token(rng_, options_.batch);
  const SampleToken phi_z = options_.share_x_token ? phi : draw_token(rng_, options_.batch);
  eval_grad_into(problem_, Channel::fx, state_.x, state_.y, &zeta, g1_);
  eval_grad_into(problem_, Channel::gx, state_.x, state_.y, &phi, g2_);
  eval_grad_into(problem_, Channel::gx, state_.x, state_.z, &phi_z, g3_);
  const ScheduleState& s = state_.schedule;
  state_.x.noalias() -= params_.xi * s.alpha * (g1_ + s.lambda * (g2_ - g3_));
  guard_iterate(state_.x, "x", state_.k);
}

void F2saSolver::advance_schedule() {
  state_.schedule = advance(state_.schedule, params_, problem_.constants());
  state_.k = state_.schedule.k;
}

void F2saSolver::step() {
  for (int t = 0; t < params_.T; ++t) {
    inner_z_step(t);
    inner_y_step(t);
  }
  outer_x_step();
  advance_schedule();
}

RunResult F2saSolver::run() { return detail::run_loop(*this, problem_, options_, "F2SA", false); }

RunResult f2sa_run(const BilevelProblem& problem, const ScheduleParams& params, const RunOptions& options) {
  F2saSolver solver(problem, params, options);
  return solver.run();
}

}  // namespace f2sa
