#include "f2sa/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "f2sa/error.hpp"

namespace f2sa {

namespace {

constexpr double kRelTol = 1e-12;

bool le(double lhs, double rhs) { return lhs <= rhs + kRelTol * std::abs(rhs); }

}  // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::F2SA ? "F2SA" : "F3SA"; }

void ScheduleParams::validate() const {
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!(std::isfinite(a) && std::isfinite(c) && 0.0 <= c && c <= a && a <= 1.0)) {
    throw InvalidArgument("schedule rates must satisfy 0 <= c <= a <= 1");
  }
  if (!finite_pos(k0)) throw InvalidArgument("k0 must be positive");
  if (!finite_pos(lambda0)) throw InvalidArgument("lambda0 must be positive");
  if (!finite_pos(xi)) throw InvalidArgument("xi must be positive");
  if (T < 1) throw InvalidArgument("T must be at least 1");
  if (!finite_pos(c_alpha) || !finite_pos(c_gamma)) throw InvalidArgument("c_alpha and c_gamma must be positive");
  if (!finite_pos(c_eta) || !finite_pos(c_xi)) throw InvalidArgument("c_eta and c_xi must be positive");
}

std::pair<double, double> default_rates(Algorithm algorithm, NoiseRegime regime) {
  if (algorithm == Algorithm::F2SA) {
    switch (regime) {
      case NoiseRegime::BothNoisy: return {5.0 / 7.0, 4.0 / 7.0};
      case NoiseRegime::UpperOnly: return {3.0 / 5.0, 2.0 / 5.0};
      case NoiseRegime::Deterministic: return {1.0 / 3.0, 0.0};
    }
  } else {
    switch (regime) {
      case NoiseRegime::BothNoisy: return {3.0 / 5.0, 2.0 / 5.0};
      case NoiseRegime::UpperOnly: return {1.0 / 2.0, 1.0 / 4.0};
      case NoiseRegime::Deterministic: return {1.0 / 3.0, 0.0};
    }
  }
  return {1.0 / 3.0, 0.0};
}

int default_inner_steps(const RegularityConstants& constants, double lambda0, double c_xi) {
  const double expr = std::max(constants.l_g1 * constants.l_star0() * constants.l_star0(),
                               std::sqrt(constants.M()) * constants.l_star1(lambda0)) /
                      (c_xi * constants.mu_g);
  if (expr < 32.0) return 32;
  if (expr > 1e9) throw InvalidArgument("inner-loop count is unreasonably large; set T explicitly");
  return static_cast<int>(std::floor(expr)) + 1;
}

ScheduleParams default_params(Algorithm algorithm, NoiseRegime regime, const RegularityConstants& constants,
                              const ScheduleOverrides& ov) {
  constants.validate();
  ScheduleParams p;
  p.algorithm = algorithm;
  p.noise_regime = regime;
  const auto [a, c] = default_rates(algorithm, regime);
  p.a = ov.a.value_or(a);
  p.c = ov.c.value_or(c);
  const double mu = constants.mu_g;
  const double threshold = constants.lambda_threshold();
  p.lambda0 = ov.lambda0.value_or(threshold > 0.0 ? threshold : 1.0);
  p.c_xi = ov.c_xi.value_or(1.0);
  p.c_eta = ov.c_eta.value_or(1.0);
  p.force_unit_eta = ov.force_unit_eta;

  if (algorithm == Algorithm::F2SA) {
    p.T = ov.T.value_or(default_inner_steps(constants, p.lambda0, p.c_xi));
    p.xi = ov.xi.value_or(1.0);
    const double k0_min = 4.0 / mu *
                          std::max({p.xi * constants.l_F1() / 2.0, p.T * constants.l_g1, constants.l_f1});
    p.k0 = ov.k0.value_or(std::max(1.0, std::ceil(k0_min)));
    p.c_gamma = ov.c_gamma.value_or(1.0 / (mu * std::pow(p.k0, 1.0 - p.c)));
    p.c_alpha = ov.c_alpha.value_or(1.0 / (2.0 * p.lambda0 * mu * std::pow(p.k0, 1.0 - p.a)));
  } else {
    if (ov.T && *ov.T != 1) throw InvalidArgument("the momentum algorithm is single-loop; T must be 1");
    p.T = 1;
    const double ls0 = constants.l_star0();
    p.xi = ov.xi.value_or(p.c_xi * mu / (constants.l_g1 * ls0 * ls0));
    const double k0_min = 128.0 / mu *
                          std::max(p.xi * constants.l_F1(),
                                   constants.l_g1 * std::sqrt(p.c_eta * constants.l_g1 / mu));
    p.k0 = ov.k0.value_or(std::max(1.0, std::ceil(k0_min)));
    p.c_gamma = ov.c_gamma.value_or(8.0 / (mu * std::pow(p.k0, 1.0 - p.c)));
    p.c_alpha = ov.c_alpha.value_or(8.0 / (mu * p.lambda0 * std::pow(p.k0, 1.0 - p.a)));
  }
  p.validate();
  return p;
}

double alpha_at(const ScheduleParams& p, long k) {
  return p.c_alpha / std::pow(static_cast<double>(k) + p.k0, p.a);
}

double gamma_at(const ScheduleParams& p, long k) {
  return p.c_gamma / std::pow(static_cast<double>(k) + p.k0, p.c);
}

double eta_at(const ScheduleParams& p, long k) {
  if (p.algorithm == Algorithm::F2SA || p.force_unit_eta || k <= 1) return 1.0;
  return std::pow(static_cast<double>(k) + 1.0, -2.0 * p.c);
}

double multiplier_increment(const ScheduleState& s, const ScheduleParams& p, const RegularityConstants& constants) {
  const double ratio_next = gamma_at(p, s.k + 1) / alpha_at(p, s.k + 1);
  double d = 0.0;
  if (p.algorithm == Algorithm::F2SA) {
    const double growth_cap = p.T * constants.mu_g / 16.0 * s.alpha * s.lambda * s.lambda;
    d = std::min(growth_cap, ratio_next / 2.0 - s.lambda);
  } else {
    d = ratio_next - s.lambda;
  }
  return std::max(d, 0.0);
}

namespace {

ScheduleState fill(long k, double lambda, const ScheduleParams& p, const RegularityConstants& constants) {
  ScheduleState s;
  s.k = k;
  s.lambda = lambda;
  s.alpha = alpha_at(p, k);
  s.gamma = gamma_at(p, k);
  s.beta = s.alpha * s.lambda;
  s.eta = eta_at(p, k);
  s.delta = multiplier_increment(s, p, constants);
  return s;
}

}  // namespace

ScheduleState make_schedule(const ScheduleParams& params, const RegularityConstants& constants) {
  params.validate();
  constants.validate();
  const double threshold = constants.lambda_threshold();
  if (params.lambda0 < threshold) {
    std::ostringstream os;
    os << "lambda0 = " << params.lambda0 << " is below 2 l_f1 / mu_g = " << threshold;
    throw PreconditionViolation(os.str());
  }
  ScheduleState s = fill(0, params.lambda0, params, constants);
  if (!le(s.beta, s.gamma)) {
    std::ostringstream os;
    os << "beta_0 = " << s.beta << " exceeds gamma_0 = " << s.gamma;
    throw PreconditionViolation(os.str());
  }
  return s;
}

ScheduleState advance(const ScheduleState& state, const ScheduleParams& params,
                      const RegularityConstants& constants) {
  return fill(state.k + 1, state.lambda + state.delta, params, constants);
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::LambdaThreshold: return "lambda0 >= 2 l_f1/mu_g";
    case Condition::BetaLeGamma: return "beta_k <= gamma_k";
    case Condition::GammaSmoothnessCap: return "gamma_k <= lower-level smoothness cap";
    case Condition::GammaInnerLoopCap: return "gamma_k <= 1/(4 T mu_g)";
    case Condition::AlphaUpperSmoothnessCap: return "alpha_k <= 1/(8 l_f1)";
    case Condition::AlphaOuterSmoothnessCap: return "outer step <= hyper-objective smoothness cap";
    case Condition::XiOverTBound: return "xi/T < c_xi mu_g / max(l_g1 l*0^2, l*1 sqrt(M))";
    case Condition::XiBound: return "xi <= c_xi mu_g / (l_g1 l*0^2)";
    case Condition::MultiplierGrowth: return "delta_k/lambda_k <= multiplier growth cap";
    case Condition::EtaBootstrap: return "eta_0 = eta_1 = 1";
    case Condition::EtaLowerBound: return "eta_{k+1} >= momentum lower bound";
    case Condition::EtaAtMostOne: return "eta_{k+1} <= 1";
  }
  return "?";
}

std::string ConditionViolation::describe() const {
  std::ostringstream os;
  os << "k=" << k << ": " << to_string(condition) << " violated (lhs=" << lhs << ", rhs=" << rhs << ")";
  return os.str();
}

std::vector<ConditionViolation> check_theorem_conditions(const ScheduleState& s, const ScheduleParams& p,
                                                         const RegularityConstants& cst) {
  std::vector<ConditionViolation> out;
  auto require = [&](Condition cond, double lhs, double rhs) {
    if (!le(lhs, rhs)) out.push_back({cond, s.k, lhs, rhs});
  };
  const double mu = cst.mu_g;
  const double ls0 = cst.l_star0();
  const double lambda_ratio = s.lambda > 0.0 ? s.delta / s.lambda : 0.0;

  require(Condition::LambdaThreshold, cst.lambda_threshold(), p.lambda0);
  require(Condition::BetaLeGamma, s.beta, s.gamma);

  if (p.algorithm == Algorithm::F2SA) {
    require(Condition::GammaSmoothnessCap, s.gamma, 1.0 / (4.0 * cst.l_g1));
    require(Condition::GammaInnerLoopCap, s.gamma, 1.0 / (4.0 * p.T * mu));
    require(Condition::AlphaUpperSmoothnessCap, s.alpha, 1.0 / (8.0 * cst.l_f1));
    require(Condition::AlphaOuterSmoothnessCap, s.alpha, 1.0 / (2.0 * p.xi * cst.l_F1()));
    const double denom = std::max(cst.l_g1 * ls0 * ls0, cst.l_star1(p.lambda0) * std::sqrt(cst.M()));
    const double xi_cap = p.c_xi * mu / denom;
    const double ratio = p.xi / p.T;
    if (!(ratio < xi_cap)) out.push_back({Condition::XiOverTBound, s.k, ratio, xi_cap});
    require(Condition::MultiplierGrowth, lambda_ratio, p.T * mu * s.beta / 16.0);
  } else {
    require(Condition::GammaSmoothnessCap, s.gamma, 1.0 / (16.0 * cst.l_g1));
    require(Condition::AlphaOuterSmoothnessCap, p.xi * s.alpha, 1.0 / cst.l_F1());
    require(Condition::XiBound, p.xi, p.c_xi * mu / (cst.l_g1 * ls0 * ls0));
    require(Condition::MultiplierGrowth, lambda_ratio, mu * s.beta / 8.0);
    if (s.k == 0) {
      const double e0 = eta_at(p, 0), e1 = eta_at(p, 1);
      if (e0 != 1.0 || e1 != 1.0) out.push_back({Condition::EtaBootstrap, 0, std::min(e0, e1), 1.0});
    }
    const double eta_next = eta_at(p, s.k + 1);
    double lower = p.c_eta * cst.l_g1 * cst.l_g1 * cst.l_g1 / mu * s.gamma * s.gamma;
    if (s.k >= 1) {
      const double g_prev = gamma_at(p, s.k - 1);
      lower = std::max(lower, 2.0 * (g_prev - s.gamma) / g_prev);
    }
    require(Condition::EtaLowerBound, lower, eta_next);
    require(Condition::EtaAtMostOne, eta_next, 1.0);
  }
  return out;
}

std::optional<long> first_admissible_eta_k(const ScheduleParams& params, const RegularityConstants& constants,
                                           long k_max) {
  std::optional<long> first;
  for (long k = 0; k <= k_max; ++k) {
    ScheduleState s;
    s.k = k;
    s.gamma = gamma_at(params, k);
    const double eta_next = eta_at(params, k + 1);
    double lower = params.c_eta * std::pow(constants.l_g1, 3) / constants.mu_g * s.gamma * s.gamma;
    if (k >= 1) {
      const double g_prev = gamma_at(params, k - 1);
      lower = std::max(lower, 2.0 * (g_prev - s.gamma) / g_prev);
    }
    const bool ok = le(lower, eta_next) && eta_next <= 1.0;
    if (ok && !first) first = k;
    if (!ok) first.reset();
  }
  return first;
}

}  // namespace f2sa
