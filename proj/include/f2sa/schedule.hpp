#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "f2sa/oracle.hpp"

namespace f2sa {

enum class Algorithm { F2SA, F3SA };

std::string_view to_string(Algorithm a);

/// Power-law step sizes, multiplier growth and momentum weights.
///
///   alpha_k = c_alpha / (k + k0)^a,   gamma_k = c_gamma / (k + k0)^c
///
/// The multiplier starts at lambda0 and grows by delta_k each outer step.
struct ScheduleParams {
  Algorithm algorithm = Algorithm::F2SA;
  NoiseRegime noise_regime = NoiseRegime::Deterministic;
  double a = 1.0 / 3.0;
  double c = 0.0;
  double k0 = 1.0;
  double lambda0 = 1.0;
  double xi = 1.0;
  int T = 32;
  double c_alpha = 0.0;
  double c_gamma = 0.0;
  double c_eta = 1.0;  // absolute constant in the momentum-weight lower bound
  double c_xi = 1.0;   // absolute constant in the xi / T bound
  bool force_unit_eta = false;  // pin eta_k = 1 (momentum off)

  /// Throws InvalidArgument unless 0 <= c <= a <= 1, k0 > 0, lambda0 > 0,
  /// xi > 0, T >= 1 and the rate constants are positive.
  void validate() const;
};

/// Rate exponents (a, c) for an algorithm and noise regime.
std::pair<double, double> default_rates(Algorithm algorithm, NoiseRegime regime);

/// Inner-loop count max(32, (c_xi mu_g)^-1 max(l_g1 l*0^2, sqrt(M) l*1)), rounded
/// up so that the xi / T bound holds strictly for xi = 1.
int default_inner_steps(const RegularityConstants& constants, double lambda0, double c_xi = 1.0);

/// Optional user overrides applied on top of the defaults. Unset fields are
/// derived from the constants.
struct ScheduleOverrides {
  std::optional<double> a, c, k0, lambda0, xi, c_alpha, c_gamma, c_eta, c_xi;
  std::optional<int> T;
  bool force_unit_eta = false;
};

/// Complete parameter set: rates from the regime table, lambda0 at its
/// threshold, the smallest admissible k0, and c_alpha / c_gamma chosen so that
/// lambda0 equals gamma_0 / (2 alpha_0) (F2SA) or gamma_0 / alpha_0 (F3SA).
ScheduleParams default_params(Algorithm algorithm, NoiseRegime regime, const RegularityConstants& constants,
                              const ScheduleOverrides& overrides = {});

/// Schedule values at outer iteration k. delta is the increment applied at the
/// end of iteration k, so lambda_{k+1} = lambda + delta.
struct ScheduleState {
  long k = 0;
  double lambda = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;  // alpha * lambda
  double delta = 0.0;
  double eta = 1.0;
};

double alpha_at(const ScheduleParams& p, long k);
double gamma_at(const ScheduleParams& p, long k);
/// Momentum weight; 1 for k <= 1, (k+1)^(-2c) afterwards.
double eta_at(const ScheduleParams& p, long k);

/// State at k = 0. Throws PreconditionViolation if lambda0 is below
/// 2 l_f1 / mu_g or beta_0 > gamma_0.
ScheduleState make_schedule(const ScheduleParams& params, const RegularityConstants& constants);

/// State at k + 1.
ScheduleState advance(const ScheduleState& state, const ScheduleParams& params,
                      const RegularityConstants& constants);

/// Multiplier increment for a state whose lambda, alpha and k are set.
double multiplier_increment(const ScheduleState& state, const ScheduleParams& params,
                            const RegularityConstants& constants);

enum class Condition {
  LambdaThreshold,          // lambda0 >= 2 l_f1 / mu_g
  BetaLeGamma,              // beta_k <= gamma_k
  GammaSmoothnessCap,       // gamma_k <= 1/(4 l_g1)  (F3SA: 1/(16 l_g1))
  GammaInnerLoopCap,        // gamma_k <= 1/(4 T mu_g)
  AlphaUpperSmoothnessCap,  // alpha_k <= 1/(8 l_f1)
  AlphaOuterSmoothnessCap,  // alpha_k <= 1/(2 xi l_F1)  (F3SA: xi alpha_k <= 1/l_F1)
  XiOverTBound,             // xi/T < c_xi mu_g / max(l_g1 l*0^2, l*1 sqrt(M))
  XiBound,                  // xi <= c_xi mu_g / (l_g1 l*0^2)
  MultiplierGrowth,         // delta_k/lambda_k <= T mu_g beta_k / 16  (F3SA: mu_g beta_k / 8)
  EtaBootstrap,             // eta_0 = eta_1 = 1
  EtaLowerBound,            // max(2(gamma_{k-1}-gamma_k)/gamma_{k-1}, c_eta l_g1^3/mu_g gamma_k^2) <= eta_{k+1}
  EtaAtMostOne,             // eta_{k+1} <= 1
};

std::string_view to_string(Condition c);

struct ConditionViolation {
  Condition condition;
  long k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string describe() const;
};

/// Every step-size inequality required by the convergence theorem of the
/// scheduled algorithm, evaluated at state.k. Empty iff all hold.
std::vector<ConditionViolation> check_theorem_conditions(const ScheduleState& state, const ScheduleParams& params,
                                                         const RegularityConstants& constants);

/// First k1 <= k_max such that the momentum-weight lower bound holds for every
/// k in [k1, k_max]; nullopt if it fails at k_max.
std::optional<long> first_admissible_eta_k(const ScheduleParams& params, const RegularityConstants& constants,
                                           long k_max);

}  // namespace f2sa
