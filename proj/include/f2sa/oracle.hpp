#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "f2sa/rng.hpp"
#include "f2sa/types.hpp"

namespace f2sa {

enum class NoiseRegime { BothNoisy, UpperOnly, Deterministic };

std::string_view to_string(NoiseRegime r);
NoiseRegime noise_regime_from_string(std::string_view s);

/// Which partial gradient an oracle call returns.
enum class Channel { fx, fy, gx, gy };

/// Declared regularity constants of a bilevel instance. The first block is
/// supplied by the problem; the member functions derive the rest.
struct RegularityConstants {
  double l_f0 = 0.0;     // bound on ||grad_x f||, ||grad_y f||
  double l_f1 = 0.0;     // smoothness of f
  double l_g0 = 0.0;     // bound on ||grad_x g||
  double l_g1 = 1.0;     // smoothness of g
  double mu_g = 1.0;     // strong convexity of g in y
  double l_g2 = 0.0;     // Hessian-Lipschitz constant of g
  double l_f2 = 0.0;     // Hessian-Lipschitz constant of f
  double sigma_f = 0.0;  // std of the upper-level gradient noise
  double sigma_g = 0.0;  // std of the lower-level gradient noise
  double l_lambda0 = 0.0;  // Lipschitz constant of x -> y*_lambda(x), uniform in lambda

  /// max(1, l_lambda0)
  double l_star0() const;
  /// Smoothness of y*_lambda at the starting multiplier.
  double l_star1(double lambda0) const;
  /// Smoothness of the hyper-objective F.
  double l_F1() const;
  /// Bias constant: ||grad F - grad L*_lambda|| <= C_lambda / lambda.
  double C_lambda() const;
  /// Second-moment bound of the outer update direction.
  double M() const;
  /// Smallest admissible multiplier, 2 l_f1 / mu_g.
  double lambda_threshold() const { return 2.0 * l_f1 / mu_g; }

  /// Throws InvalidArgument when a declared constant is negative or non-finite,
  /// mu_g <= 0, l_g1 < mu_g, or l_lambda0 exceeds 3 l_g1 / mu_g.
  void validate() const;
};

/// Closed-form ground truth for analytic problems.
class ProblemAnalytics {
 public:
  virtual ~ProblemAnalytics() = default;
  virtual Vector y_star(const Vector& x) const = 0;
  virtual Vector y_star_lambda(const Vector& x, double lambda) const = 0;
  virtual double F(const Vector& x) const = 0;
  virtual Vector grad_F(const Vector& x) const = 0;
  virtual double F_star() const = 0;
};

/// Exact second derivatives of the lower-level objective.
class SecondOrderOracle {
 public:
  virtual ~SecondOrderOracle() = default;
  /// d_y x d_y, symmetric positive definite.
  virtual Matrix hess_g_yy(const Vector& x, const Vector& y) const = 0;
  /// d_x x d_y mixed second derivative of g.
  virtual Matrix jac_g_xy(const Vector& x, const Vector& y) const = 0;
};

struct DatasetLosses {
  double train = 0.0;       // mean loss on the (possibly corrupted) training set
  double validation = 0.0;  // mean loss on the clean validation set
};

/// First-order stochastic oracles for f and g.
///
/// A null token asks for the exact gradient. Oracles are const and may be
/// evaluated concurrently.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;
  virtual NoiseRegime noise_regime() const = 0;
  virtual const RegularityConstants& constants() const = 0;

  /// Writes the requested partial gradient into `out` (resized as needed).
  virtual void gradient(Channel which, const Vector& x, const Vector& y, const SampleToken* token,
                        Vector& out) const = 0;

  virtual std::optional<double> upper_value(const Vector&, const Vector&) const { return std::nullopt; }
  virtual std::optional<double> lower_value(const Vector&, const Vector&) const { return std::nullopt; }
  virtual std::optional<DatasetLosses> dataset_losses(const Vector&, const Vector&) const {
    return std::nullopt;
  }

  virtual const ProblemAnalytics* analytics() const { return nullptr; }
  virtual const SecondOrderOracle* second_order() const { return nullptr; }

  int channel_dim(Channel which) const {
    return (which == Channel::fx || which == Channel::gx) ? dim_x() : dim_y();
  }
};

/// Checked oracle call: validates dimensions and output finiteness.
void eval_grad_into(const BilevelProblem& problem, Channel which, const Vector& x, const Vector& y,
                    const SampleToken* token, Vector& out);

Vector eval_grad(const BilevelProblem& problem, Channel which, const Vector& x, const Vector& y,
                 const SampleToken* token = nullptr);

/// Next replayable token from `stream`. batch_size == 0 is rejected.
SampleToken draw_token(RngStream& stream, std::uint32_t batch_size);

}  // namespace f2sa
