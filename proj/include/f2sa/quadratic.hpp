#pragma once

#include <cstdint>
#include <vector>

#include "f2sa/oracle.hpp"

namespace f2sa {

/// Coefficients of a quadratic bilevel instance
///
///   f(x, y) = 1/2 y'A_f y + 1/2 x'B_f x + x'C_f y + b_x'x + b_y'y + c0
///   g(x, y) = 1/2 (y - Px - p)' A_g (y - Px - p)
///
/// with A_g symmetric positive definite, so y*(x) = Px + p.
struct QuadraticSpec {
  Matrix A_f, B_f, C_f, A_g, P;
  Vector b_x, b_y, p;
  double c0 = 0.0;
  double box = 2.0;  // local constants are taken over |x_i| <= box
  NoiseRegime regime = NoiseRegime::Deterministic;
  double sigma_f = 0.0;
  double sigma_g = 0.0;
};

/// Quadratic bilevel problem with closed-form ground truth and Gaussian
/// additive oracle noise. The noise of a sampled gradient depends only on the
/// token and the channel, so one token gives the same perturbation at any
/// point; per-coordinate std is sigma / sqrt((d_x + d_y) batch).
class QuadraticBilevel final : public BilevelProblem, public ProblemAnalytics, public SecondOrderOracle {
 public:
  explicit QuadraticBilevel(QuadraticSpec spec);

  int dim_x() const override { return static_cast<int>(spec_.B_f.rows()); }
  int dim_y() const override { return static_cast<int>(spec_.A_g.rows()); }
  NoiseRegime noise_regime() const override { return spec_.regime; }
  const RegularityConstants& constants() const override { return constants_; }
  const QuadraticSpec& spec() const { return spec_; }

  void gradient(Channel which, const Vector& x, const Vector& y, const SampleToken* token,
                Vector& out) const override;
  std::optional<double> upper_value(const Vector& x, const Vector& y) const override;
  std::optional<double> lower_value(const Vector& x, const Vector& y) const override;

  const ProblemAnalytics* analytics() const override { return this; }
  const SecondOrderOracle* second_order() const override { return this; }

  Vector y_star(const Vector& x) const override;
  Vector y_star_lambda(const Vector& x, double lambda) const override;
  double F(const Vector& x) const override;
  Vector grad_F(const Vector& x) const override;
  double F_star() const override;
  /// Minimizer of F.
  Vector x_star() const;

  Matrix hess_g_yy(const Vector& x, const Vector& y) const override;
  Matrix jac_g_xy(const Vector& x, const Vector& y) const override;

  /// Largest ||grad_x f||, ||grad_y f|| over the box, evaluated at y*(x) and
  /// at y*_lambda(x) for lambda on a doubling grid above the threshold.
  double local_l_f0() const { return constants_.l_f0; }

 private:
  void compute_constants();
  std::vector<Vector> box_points() const;

  QuadraticSpec spec_;
  RegularityConstants constants_;
  Matrix Q_;  // Hessian of F
  Vector q_;  // gradient of F at 0
  double F0_ = 0.0;
};

/// f = 1/2 x^2 + 1/2 (y - y_target)^2, g = 1/2 (y - x)^2. y_target = 0 is the
/// canonical instance with grad F(x) = 2x.
QuadraticBilevel make_scalar_quadratic(double y_target = 0.0, NoiseRegime regime = NoiseRegime::Deterministic,
                                       double sigma = 0.0, double box = 2.0);

/// Random instance with d_x = dx, d_y = dy. A_g has condition number
/// `conditioning` (smallest eigenvalue 1); F is strongly convex.
QuadraticBilevel make_quadratic(int dx, int dy, std::uint64_t seed, double conditioning = 1.0,
                                NoiseRegime regime = NoiseRegime::Deterministic, double sigma = 0.0);

}  // namespace f2sa
