#include "f2sa/f3sa_solver.hpp"

#include "f2sa/error.hpp"
#include "run_loop.hpp"

namespace f2sa {

Vector momentum_update(const Vector& buffer, const Vector& fresh_current, const Vector& fresh_previous, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("momentum weight must lie in (0, 1]");
  if (buffer.size() != fresh_current.size() || buffer.size() != fresh_previous.size()) {
    throw InvalidArgument("momentum buffers have mismatched dimensions");
  }
  if (eta == 1.0) return fresh_current;
  return fresh_current + (1.0 - eta) * (buffer - fresh_previous);
}

F3saSolver::F3saSolver(const BilevelProblem& problem, ScheduleParams params, RunOptions options)
    : problem_(problem), params_(params), options_(std::move(options)), rng_(options_.seed) {
  params_.validate();
  if (params_.T != 1) throw InvalidArgument("the momentum solver is single-loop; T must be 1");
  if (options_.batch == 0) throw InvalidArgument("batch size must be positive");
  state_.x = detail::initial_point(options_.x0, problem.dim_x(), "x");
  state_.y = detail::initial_point(options_.y0, problem.dim_y(), "y");
  state_.z = detail::initial_point(options_.z0, problem.dim_y(), "z");
  state_.schedule = make_schedule(params_, problem.constants());
  state_.k = 0;
}

void F3saSolver::refresh(Vector& buffer, Channel which, const Vector& x_cur, const Vector& y_cur,
                         const Vector& x_prev, const Vector& y_prev, const SampleToken& token, double eta) {
  eval_grad_into(problem_, which, x_cur, y_cur, &token, cur_);
  if (eta == 1.0 || !momentum_.initialized) {
    buffer = cur_;
    return;
  }
  eval_grad_into(problem_, which, x_prev, y_prev, &token, prev_);
  buffer = momentum_update(buffer, cur_, prev_, eta);
}

void F3saSolver::step() {
  const ScheduleState& s = state_.schedule;
  const double eta = s.eta;
  const long k = state_.k;
  MomentumState& m = momentum_;

  // y_k and z_k are needed as previous points of the x channels after the
  // inner updates have overwritten them.
  const Vector y_k = state_.y;
  const Vector z_k = state_.z;

  const SampleToken phi_z = draw_token(rng_, options_.batch);
  refresh(m.h_z, Channel::gy, state_.x, z_k, m.prev_x, m.prev_z, phi_z, eta);
  state_.z.noalias() -= s.gamma * m.h_z;
  guard_iterate(state_.z, "z", k);

  const SampleToken zeta_y = draw_token(rng_, options_.batch);
  const SampleToken phi_y = draw_token(rng_, options_.batch);
  refresh(m.h_fy, Channel::fy, state_.x, y_k, m.prev_x, m.prev_y, zeta_y, eta);
  refresh(m.h_gy, Channel::gy, state_.x, y_k, m.prev_x, m.prev_y, phi_y, eta);
  state_.y.noalias() -= s.alpha * (m.h_fy + s.lambda * m.h_gy);
  guard_iterate(state_.y, "y", k);

  const SampleToken zeta_x = draw_token(rng_, options_.batch);
  const SampleToken phi_x = draw_token(rng_, options_.batch);
  refresh(m.h_fx, Channel::fx, state_.x, state_.y, m.prev_x, y_k, zeta_x, eta);
  refresh(m.h_gxy, Channel::gx, state_.x, state_.y, m.prev_x, y_k, phi_x, eta);
  refresh(m.h_gxz, Channel::gx, state_.x, state_.z, m.prev_x, z_k, phi_x, eta);

  m.prev_x = state_.x;
  m.prev_y = y_k;
  m.prev_z = z_k;
  m.initialized = true;

  state_.x.noalias() -= params_.xi * s.alpha * (m.h_fx + s.lambda * (m.h_gxy - m.h_gxz));
  guard_iterate(state_.x, "x", k);

  state_.schedule = advance(state_.schedule, params_, problem_.constants());
  state_.k = state_.schedule.k;
}

RunResult F3saSolver::run() { return detail::run_loop(*this, problem_, options_, "F3SA", true); }

RunResult f3sa_run(const BilevelProblem& problem, const ScheduleParams& params, const RunOptions& options) {
  F3saSolver solver(problem, params, options);
  return solver.run();
}

}  // namespace f2sa
