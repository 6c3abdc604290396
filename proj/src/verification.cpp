#include "f2sa/verification.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "f2sa/reference.hpp"

namespace f2sa {

namespace {

Vector uniform_in_box(SplitMix64& engine, int d, double box) {
  std::uniform_real_distribution<double> u(-box, box);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = u(engine);
  return v;
}

CheckResult make_result(std::string name, double limit) {
  CheckResult r;
  r.name = std::move(name);
  r.limit = limit;
  return r;
}

void finish(CheckResult& r) { r.passed = r.violations == 0 && r.cases > 0; }

double lambda_min(const BilevelProblem& p) {
  const double thr = p.constants().lambda_threshold();
  return thr > 0.0 ? thr : 1.0;
}

}  // namespace

std::vector<std::unique_ptr<QuadraticBilevel>> builtin_analytic_problems() {
  std::vector<std::unique_ptr<QuadraticBilevel>> out;
  out.push_back(std::make_unique<QuadraticBilevel>(make_scalar_quadratic(0.0)));
  out.push_back(std::make_unique<QuadraticBilevel>(make_scalar_quadratic(1.0)));
  out.push_back(std::make_unique<QuadraticBilevel>(make_quadratic(2, 2, 11, 1.0)));
  out.push_back(std::make_unique<QuadraticBilevel>(make_quadratic(3, 2, 12, 5.0)));
  out.push_back(std::make_unique<QuadraticBilevel>(make_quadratic(2, 3, 13, 10.0)));
  return out;
}

CheckResult check_hypergradient_fd(int instances, std::uint64_t seed) {
  CheckResult r = make_result("hypergradient vs finite differences", 1e-5);
  SplitMix64 engine(hash_combine(seed, 0xfd));
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> cond(1.0, 10.0);
  for (int i = 0; i < instances; ++i) {
    const int dx = dim(engine);
    const int dy = dim(engine);
    const QuadraticBilevel q = make_quadratic(dx, dy, engine(), cond(engine));
    const Vector x = uniform_in_box(engine, dx, q.spec().box);
    const Vector exact = exact_hypergradient(q, x, solve_lower(q, x));
    auto composed = [&](const Vector& p) { return *q.upper_value(p, solve_lower(q, p)); };
    const Vector fd = finite_difference_grad(composed, x, 1e-5);
    const double rel = (exact - fd).norm() / std::max(fd.norm(), 1e-8);
    r.worst = std::max(r.worst, rel);
    ++r.cases;
    if (!(rel <= r.limit)) ++r.violations;
  }
  finish(r);
  return r;
}

CheckResult check_bias_grid(const QuadraticBilevel& problem) {
  CheckResult r = make_result("bias bound C_lambda / lambda", 0.0);
  const int dx = problem.dim_x();
  const double box = problem.spec().box;
  // 21 points on the segment between opposite vertices.
  Vector dir = Vector::Ones(dx);
  for (int i = 1; i < dx; i += 2) dir[i] = -1.0;
  const double lam0 = lambda_min(problem);
  long mono_fail = 0;
  for (int j = 0; j <= 20; ++j) {
    const Vector x = (-1.0 + j / 10.0) * box * dir;
    double prev = 0.0;
    for (int i = 0; i <= 9; ++i) {
      const double lambda = lam0 * std::ldexp(1.0, i);
      const BiasCheck b = bias_bound_check(problem, x, lambda);
      ++r.cases;
      r.worst = std::max(r.worst, b.measured * lambda / std::max(b.bound * lambda, 1e-300));
      if (!b.pass) ++r.violations;
      if (i > 0 && b.measured > prev + 1e-12) ++mono_fail;
      prev = b.measured;
    }
  }
  r.violations += mono_fail;
  r.limit = 1.0;
  std::ostringstream os;
  os << "worst measured/bound ratio " << r.worst << ", monotonicity failures " << mono_fail;
  r.detail = os.str();
  finish(r);
  return r;
}

CheckResult check_y_lambda_lipschitz(const QuadraticBilevel& problem, int samples, std::uint64_t seed) {
  CheckResult r = make_result("Lipschitz continuity of y*_lambda", 1.0);
  SplitMix64 engine(hash_combine(seed, 0x11b));
  const RegularityConstants& c = problem.constants();
  const double lam0 = lambda_min(problem);
  std::uniform_real_distribution<double> logu(0.0, 10.0);
  for (int s = 0; s < samples; ++s) {
    const Vector x1 = uniform_in_box(engine, problem.dim_x(), problem.spec().box);
    const Vector x2 = uniform_in_box(engine, problem.dim_x(), problem.spec().box);
    double l1 = lam0 * std::exp2(logu(engine));
    double l2 = lam0 * std::exp2(logu(engine));
    if (l1 > l2) std::swap(l1, l2);
    if (l2 > l1) {
      const double lhs = (problem.y_star_lambda(x1, l1) - problem.y_star_lambda(x1, l2)).norm();
      const double rhs = 2.0 * (l2 - l1) / (l1 * l2) * c.l_f0 / c.mu_g;
      r.worst = std::max(r.worst, lhs / rhs);
      ++r.cases;
      if (lhs > rhs * (1.0 + 1e-12) + 1e-15) ++r.violations;
    }
    const double lhs = (problem.y_star_lambda(x1, l1) - problem.y_star_lambda(x2, l1)).norm();
    const double rhs = c.l_lambda0 * (x1 - x2).norm();
    ++r.cases;
    if (lhs > rhs * (1.0 + 1e-9) + 1e-15) ++r.violations;
  }
  finish(r);
  return r;
}

CheckResult check_analytic_consistency(const QuadraticBilevel& problem, std::uint64_t seed) {
  CheckResult r = make_result("closed-form grad F vs second-order formula", 1e-10);
  SplitMix64 engine(hash_combine(seed, 0xac));
  for (int s = 0; s < 20; ++s) {
    const Vector x = uniform_in_box(engine, problem.dim_x(), problem.spec().box);
    const double err = (problem.grad_F(x) - exact_hypergradient(problem, x, problem.y_star(x))).norm();
    r.worst = std::max(r.worst, err);
    ++r.cases;
    if (!(err <= r.limit)) ++r.violations;
  }
  finish(r);
  return r;
}

CheckResult check_y_lambda_stationarity(const QuadraticBilevel& problem, std::uint64_t seed) {
  CheckResult r = make_result("stationarity of closed-form y*_lambda", 1e-12);
  SplitMix64 engine(hash_combine(seed, 0x57a));
  const double lam0 = lambda_min(problem);
  Vector gf, gg;
  for (int s = 0; s < 20; ++s) {
    const Vector x = uniform_in_box(engine, problem.dim_x(), problem.spec().box);
    for (int i = 0; i <= 10; ++i) {
      const double lambda = lam0 * std::ldexp(1.0, i);
      const Vector y = problem.y_star_lambda(x, lambda);
      problem.gradient(Channel::fy, x, y, nullptr, gf);
      problem.gradient(Channel::gy, x, y, nullptr, gg);
      // Roundoff in the two terms scales with their individual magnitudes.
      const double scale = 1.0 + gf.norm() + lambda * problem.spec().A_g.norm() * (y.norm() + problem.y_star(x).norm());
      const double rel = (gf + lambda * gg).norm() / scale;
      r.worst = std::max(r.worst, rel);
      ++r.cases;
      if (!(rel <= r.limit)) ++r.violations;
    }
  }
  finish(r);
  return r;
}

std::vector<CheckResult> run_reference_suite() {
  std::vector<CheckResult> out;
  out.push_back(check_hypergradient_fd());
  const auto problems = builtin_analytic_problems();
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const std::string tag = " [problem " + std::to_string(i) + "]";
    for (CheckResult r : {check_bias_grid(*problems[i]), check_y_lambda_lipschitz(*problems[i]),
                          check_analytic_consistency(*problems[i]), check_y_lambda_stationarity(*problems[i])}) {
      r.name += tag;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace f2sa
