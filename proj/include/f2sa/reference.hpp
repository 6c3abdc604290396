#pragma once

#include <cstdint>
#include <functional>

#include "f2sa/oracle.hpp"
#include "f2sa/solver.hpp"

namespace f2sa {

/// grad_x f - jac_g_xy * hess_g_yy^{-1} * grad_y f at (x, y_star), using a
/// Cholesky solve. Requires a second-order oracle; throws NumericFailure if the
/// Hessian is not positive definite.
Vector exact_hypergradient(const BilevelProblem& problem, const Vector& x, const Vector& y_star);

/// Gradient of the Lagrangian value function,
/// grad_x f(x, y_lambda) + lambda (grad_x g(x, y_lambda) - grad_x g(x, y_star)).
/// Throws PreconditionViolation when lambda < 2 l_f1 / mu_g.
Vector proxy_gradient(const BilevelProblem& problem, const Vector& x, double lambda, const Vector& y_lambda,
                      const Vector& y_star);

struct BiasCheck {
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Compares ||grad F(x) - grad L*_lambda(x)|| with C_lambda / lambda, using
/// the problem's declared (box-local) constants.
BiasCheck bias_bound_check(const BilevelProblem& problem, const Vector& x, double lambda);

/// Central differences, one coordinate at a time. Throws NumericFailure on a
/// non-finite map value and InvalidArgument for h <= 0.
Vector finite_difference_grad(const std::function<double(const Vector&)>& map, const Vector& x, double h);

struct LowerSolveOptions {
  double tol = 1e-10;  // on the gradient norm
  long max_steps = 1'000'000;
};

/// y*(x): closed form when available, Newton with the second-order oracle
/// otherwise, plain gradient descent as the last resort.
Vector solve_lower(const BilevelProblem& problem, const Vector& x, const Vector* warm_start = nullptr,
                   const LowerSolveOptions& options = {});

/// y*_lambda(x) = argmin_y f(x, y) + lambda g(x, y): closed form when
/// available, otherwise gradient descent with step 1 / (l_f1 + lambda l_g1).
Vector solve_penalized(const BilevelProblem& problem, const Vector& x, double lambda,
                       const Vector* warm_start = nullptr, const LowerSolveOptions& options = {});

/// F(x) = f(x, y*(x)); requires upper_value.
double hyper_objective(const BilevelProblem& problem, const Vector& x, const Vector* warm_start = nullptr);

/// Exact hypergradient of the hyper-objective, solving the lower level first.
Vector reference_hypergradient(const BilevelProblem& problem, const Vector& x, const Vector* warm_start = nullptr);

struct SoboOptions {
  double step_size = 0.1;        // outer step
  int inner_steps = 10;          // lower-level SGD steps per outer step
  double inner_step_size = 0.0;  // 0 selects 1 / l_g1
  RunOptions run;
};

/// Second-order baseline: N stochastic gradient steps on the lower level,
/// then x <- x - step * (grad_x f - jac_g_xy hess_g_yy^{-1} grad_y f) with
/// sampled first-order terms and exact second-order terms. The trace uses the
/// same columns as the first-order solvers.
RunResult sobo_baseline_run(const BilevelProblem& problem, const SoboOptions& options);

struct NoboOptions {
  double step_size = 0.0;  // 0 selects 1 / l_g1
  RunOptions run;
};

/// Single-level baseline: stochastic gradient descent on g(x0, y) with the
/// outer variable frozen at its initial value.
RunResult nobo_baseline_run(const BilevelProblem& problem, const NoboOptions& options);

}  // namespace f2sa
