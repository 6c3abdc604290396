#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "f2sa/quadratic.hpp"

namespace f2sa {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // worst observed value of the checked quantity
  double limit = 0.0;
  long cases = 0;
  long violations = 0;
  std::string detail;
};

/// Scalar canonical and shifted instances plus seeded random instances with
/// d_x, d_y <= 3.
std::vector<std::unique_ptr<QuadraticBilevel>> builtin_analytic_problems();

/// Exact hypergradient vs central differences of x -> f(x, y*(x)) on random
/// instances with dims <= 5; relative error limit 1e-5.
CheckResult check_hypergradient_fd(int instances = 100, std::uint64_t seed = 1);

/// Bias bound over lambda in {2^i lambda_min : 0 <= i <= 9} and 21 points of x
/// in the box, plus bias(2 lambda) <= bias(lambda) + 1e-12.
CheckResult check_bias_grid(const QuadraticBilevel& problem);

/// Sampled Lipschitz bounds of y*_lambda in lambda and in x.
CheckResult check_y_lambda_lipschitz(const QuadraticBilevel& problem, int samples = 200, std::uint64_t seed = 2);

/// Closed-form grad F vs the second-order formula at 20 random x; limit 1e-10.
CheckResult check_analytic_consistency(const QuadraticBilevel& problem, std::uint64_t seed = 3);

/// Stationarity of the closed-form y*_lambda for f + lambda g; limit 1e-12
/// relative to the gradient scale.
CheckResult check_y_lambda_stationarity(const QuadraticBilevel& problem, std::uint64_t seed = 4);

/// All of the above over the built-in problems.
std::vector<CheckResult> run_reference_suite();

}  // namespace f2sa
