#include "f2sa/reference.hpp"

#include <cmath>

#include "f2sa/diagnostics.hpp"
#include "f2sa/error.hpp"
#include "run_loop.hpp"

namespace f2sa {

namespace {

void require_threshold(const BilevelProblem& problem, double lambda) {
  const double thr = problem.constants().lambda_threshold();
  if (!(lambda >= thr * (1.0 - 1e-12))) {
    throw PreconditionViolation("lambda = " + std::to_string(lambda) + " is below the threshold 2 l_f1 / mu_g = " +
                                std::to_string(thr));
  }
}

const SecondOrderOracle& require_second_order(const BilevelProblem& problem) {
  const SecondOrderOracle* so = problem.second_order();
  if (!so) throw PreconditionViolation("problem does not provide second-order derivatives");
  return *so;
}

Vector gradient_descent(const std::function<void(const Vector&, Vector&)>& grad, Vector y, double step,
                        const LowerSolveOptions& options, const char* what) {
  Vector g;
  for (long it = 0; it < options.max_steps; ++it) {
    grad(y, g);
    if (g.norm() <= options.tol) return y;
    y.noalias() -= step * g;
    if (!y.allFinite()) throw NumericFailure(std::string(what) + ": gradient descent diverged");
  }
  grad(y, g);
  if (g.norm() <= options.tol) return y;
  throw NumericFailure(std::string(what) + ": no convergence within " + std::to_string(options.max_steps) +
                       " steps, gradient norm " + std::to_string(g.norm()));
}

}  // namespace

Vector exact_hypergradient(const BilevelProblem& problem, const Vector& x, const Vector& y_star) {
  const SecondOrderOracle& so = require_second_order(problem);
  const Matrix H = so.hess_g_yy(x, y_star);
  const Matrix J = so.jac_g_xy(x, y_star);
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) throw NumericFailure("lower-level Hessian is not positive definite");
  const Vector v = llt.solve(eval_grad(problem, Channel::fy, x, y_star));
  Vector out = eval_grad(problem, Channel::fx, x, y_star) - J * v;
  if (!out.allFinite()) throw NumericFailure("non-finite hypergradient");
  return out;
}

Vector proxy_gradient(const BilevelProblem& problem, const Vector& x, double lambda, const Vector& y_lambda,
                      const Vector& y_star) {
  require_threshold(problem, lambda);
  return eval_grad(problem, Channel::fx, x, y_lambda) +
         lambda * (eval_grad(problem, Channel::gx, x, y_lambda) - eval_grad(problem, Channel::gx, x, y_star));
}

BiasCheck bias_bound_check(const BilevelProblem& problem, const Vector& x, double lambda) {
  require_threshold(problem, lambda);
  const ProblemAnalytics* an = problem.analytics();
  if (!an && !problem.second_order()) {
    throw PreconditionViolation("bias check needs closed-form analytics or second-order derivatives");
  }
  const Vector y_star = solve_lower(problem, x);
  const Vector y_lambda = solve_penalized(problem, x, lambda);
  const Vector grad_F = an ? an->grad_F(x) : exact_hypergradient(problem, x, y_star);
  BiasCheck r;
  r.measured = (grad_F - proxy_gradient(problem, x, lambda, y_lambda, y_star)).norm();
  r.bound = problem.constants().C_lambda() / lambda;
  r.pass = r.measured <= r.bound + 1e-10;
  return r;
}

Vector finite_difference_grad(const std::function<double(const Vector&)>& map, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Vector g(x.size());
  Vector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = map(p);
    p[i] = x[i] - h;
    const double down = map(p);
    p[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericFailure("non-finite map value in finite differences, coordinate " + std::to_string(i));
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Vector solve_lower(const BilevelProblem& problem, const Vector& x, const Vector* warm_start,
                   const LowerSolveOptions& options) {
  if (const ProblemAnalytics* an = problem.analytics()) return an->y_star(x);
  Vector y = warm_start ? *warm_start : Vector::Zero(problem.dim_y());
  if (const SecondOrderOracle* so = problem.second_order()) {
    // Damped Newton; the lower objective, when available, drives a backtracking
    // line search.
    Vector g = eval_grad(problem, Channel::gy, x, y);
    for (int it = 0; it < 200 && g.norm() > options.tol; ++it) {
      Eigen::LLT<Matrix> llt(so->hess_g_yy(x, y));
      if (llt.info() != Eigen::Success) throw NumericFailure("lower-level Hessian is not positive definite");
      const Vector dir = llt.solve(g);
      double t = 1.0;
      auto base = problem.lower_value(x, y);
      Vector cand = y - dir;
      if (base) {
        const double slope = g.dot(dir);
        while (t > 1e-12) {
          const double v = *problem.lower_value(x, cand);
          if (std::isfinite(v) && v <= *base - 1e-4 * t * slope) break;
          t *= 0.5;
          cand = y - t * dir;
        }
      }
      Vector g_new = eval_grad(problem, Channel::gy, x, cand);
      // Roundoff floor: once the line search can no longer make progress, stop.
      if (t <= 1e-12 && g_new.norm() >= g.norm()) break;
      y = cand;
      g = g_new;
    }
    if (g.norm() <= options.tol) return y;
  }
  const double step = 1.0 / problem.constants().l_g1;
  return gradient_descent([&](const Vector& v, Vector& out) { eval_grad_into(problem, Channel::gy, x, v, nullptr, out); },
                          y, step, options, "lower-level solve");
}

Vector solve_penalized(const BilevelProblem& problem, const Vector& x, double lambda, const Vector* warm_start,
                       const LowerSolveOptions& options) {
  if (const ProblemAnalytics* an = problem.analytics()) return an->y_star_lambda(x, lambda);
  const RegularityConstants& c = problem.constants();
  const double step = 1.0 / (c.l_f1 + lambda * c.l_g1);
  Vector y = warm_start ? *warm_start : solve_lower(problem, x);
  Vector gf;
  return gradient_descent(
      [&](const Vector& v, Vector& out) {
        eval_grad_into(problem, Channel::fy, x, v, nullptr, gf);
        eval_grad_into(problem, Channel::gy, x, v, nullptr, out);
        out = gf + lambda * out;
      },
      y, step, options, "penalized solve");
}

double hyper_objective(const BilevelProblem& problem, const Vector& x, const Vector* warm_start) {
  if (const ProblemAnalytics* an = problem.analytics()) return an->F(x);
  const Vector y = solve_lower(problem, x, warm_start);
  auto v = problem.upper_value(x, y);
  if (!v) throw PreconditionViolation("problem does not expose the upper-level value");
  return *v;
}

Vector reference_hypergradient(const BilevelProblem& problem, const Vector& x, const Vector* warm_start) {
  return exact_hypergradient(problem, x, solve_lower(problem, x, warm_start));
}

namespace {

/// Minimal schedule-free solver driven by the shared run loop.
template <class StepFn>
class BaselineSolver {
 public:
  BaselineSolver(SolverState s, StepFn fn) : state_(std::move(s)), fn_(std::move(fn)) {}
  const SolverState& state() const { return state_; }
  const ScheduleParams& params() const { return params_; }
  void step() {
    fn_(state_);
    ++state_.k;
    state_.schedule.k = state_.k;
  }

 private:
  SolverState state_;
  StepFn fn_;
  ScheduleParams params_;
};

SolverState baseline_state(const BilevelProblem& problem, const RunOptions& run, double alpha, double gamma) {
  SolverState s;
  s.x = detail::initial_point(run.x0, problem.dim_x(), "x");
  s.y = detail::initial_point(run.y0, problem.dim_y(), "y");
  s.z = s.y;
  s.schedule.alpha = alpha;
  s.schedule.gamma = gamma;
  s.schedule.lambda = 0.0;
  return s;
}

/// The penalty-specific columns are meaningless for the baselines.
RunResult scrub(RunResult r) {
  for (auto& row : r.trace.rows) {
    row.proxy_norm.reset();
    row.dist_y.reset();
    row.potential.reset();
  }
  return r;
}

}  // namespace

RunResult sobo_baseline_run(const BilevelProblem& problem, const SoboOptions& options) {
  const SecondOrderOracle& so = require_second_order(problem);
  if (options.inner_steps < 0) throw InvalidArgument("inner_steps must be nonnegative");
  if (!(options.step_size > 0.0)) throw InvalidArgument("step_size must be positive");
  const double inner = options.inner_step_size > 0.0 ? options.inner_step_size : 1.0 / problem.constants().l_g1;
  if (options.run.batch == 0) throw InvalidArgument("batch size must be positive");

  RngStream rng(options.run.seed);
  Vector g, fy;
  auto step = [&](SolverState& s) {
    for (int t = 0; t < options.inner_steps; ++t) {
      const SampleToken phi = draw_token(rng, options.run.batch);
      eval_grad_into(problem, Channel::gy, s.x, s.y, &phi, g);
      s.y.noalias() -= inner * g;
      guard_iterate(s.y, "y", s.k, t);
    }
    const SampleToken zeta_x = draw_token(rng, options.run.batch);
    const SampleToken zeta_y = draw_token(rng, options.run.batch);
    eval_grad_into(problem, Channel::fx, s.x, s.y, &zeta_x, g);
    eval_grad_into(problem, Channel::fy, s.x, s.y, &zeta_y, fy);
    Eigen::LLT<Matrix> llt(so.hess_g_yy(s.x, s.y));
    if (llt.info() != Eigen::Success) throw NumericFailure("lower-level Hessian is not positive definite", s.k);
    g.noalias() -= so.jac_g_xy(s.x, s.y) * llt.solve(fy);
    s.x.noalias() -= options.step_size * g;
    guard_iterate(s.x, "x", s.k);
    s.z = s.y;
  };
  BaselineSolver solver(baseline_state(problem, options.run, options.step_size, inner), step);
  return scrub(detail::run_loop(solver, problem, options.run, "SOBO", false, false));
}

RunResult nobo_baseline_run(const BilevelProblem& problem, const NoboOptions& options) {
  const double lr = options.step_size > 0.0 ? options.step_size : 1.0 / problem.constants().l_g1;
  if (options.run.batch == 0) throw InvalidArgument("batch size must be positive");
  RngStream rng(options.run.seed);
  Vector g;
  auto step = [&](SolverState& s) {
    const SampleToken phi = draw_token(rng, options.run.batch);
    eval_grad_into(problem, Channel::gy, s.x, s.y, &phi, g);
    s.y.noalias() -= lr * g;
    guard_iterate(s.y, "y", s.k);
    s.z = s.y;
  };
  BaselineSolver solver(baseline_state(problem, options.run, 0.0, lr), step);
  return scrub(detail::run_loop(solver, problem, options.run, "NoBO", false, false));
}

}  // namespace f2sa
