#include "f2sa/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "f2sa/error.hpp"

namespace f2sa {

std::string_view to_string(NoiseRegime r) {
  switch (r) {
    case NoiseRegime::BothNoisy: return "BothNoisy";
    case NoiseRegime::UpperOnly: return "UpperOnly";
    case NoiseRegime::Deterministic: return "Deterministic";
  }
  return "?";
}

NoiseRegime noise_regime_from_string(std::string_view s) {
  if (s == "BothNoisy") return NoiseRegime::BothNoisy;
  if (s == "UpperOnly") return NoiseRegime::UpperOnly;
  if (s == "Deterministic") return NoiseRegime::Deterministic;
  throw InvalidArgument("unknown noise regime '" + std::string(s) + "'");
}

double RegularityConstants::l_star0() const { return std::max(1.0, l_lambda0); }

double RegularityConstants::l_star1(double lambda0) const {
  const double tail = lambda0 > 0.0 ? l_f2 / lambda0 : 0.0;
  return 32.0 * (l_g2 + tail) * l_g1 * l_g1 / (mu_g * mu_g * mu_g);
}

double RegularityConstants::l_F1() const {
  return l_star0() * (l_f1 + l_g1 * l_g1 / mu_g + 2.0 * l_f0 * l_g1 * l_g2 / (mu_g * mu_g));
}

double RegularityConstants::C_lambda() const {
  return (4.0 * l_f0 * l_g1 / (mu_g * mu_g)) * (l_f1 + 2.0 * l_f0 * l_g2 / mu_g);
}

double RegularityConstants::M() const {
  return std::max(l_f0 * l_f0 + sigma_f * sigma_f, l_g0 * l_g0 + sigma_g * sigma_g);
}

void RegularityConstants::validate() const {
  const double vals[] = {l_f0, l_f1, l_g0, l_g1, mu_g, l_g2, l_f2, sigma_f, sigma_g, l_lambda0};
  for (double v : vals) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("regularity constants must be finite and nonnegative");
  }
  if (mu_g <= 0.0) throw InvalidArgument("mu_g must be positive");
  if (l_g1 < mu_g) throw InvalidArgument("l_g1 must be at least mu_g");
  if (l_lambda0 > 3.0 * l_g1 / mu_g * (1.0 + 1e-12)) {
    throw InvalidArgument("l_lambda0 exceeds 3 l_g1 / mu_g");
  }
}

void eval_grad_into(const BilevelProblem& problem, Channel which, const Vector& x, const Vector& y,
                    const SampleToken* token, Vector& out) {
  if (x.size() != problem.dim_x() || y.size() != problem.dim_y()) {
    throw InvalidArgument("oracle called with x of size " + std::to_string(x.size()) + ", y of size " +
                          std::to_string(y.size()) + "; problem expects (" + std::to_string(problem.dim_x()) +
                          ", " + std::to_string(problem.dim_y()) + ")");
  }
  problem.gradient(which, x, y, token, out);
  if (out.size() != problem.channel_dim(which)) {
    throw InvalidArgument("oracle returned a gradient of the wrong dimension");
  }
  if (!out.allFinite()) {
    throw NumericFailure("oracle returned a non-finite gradient at ||x||=" + std::to_string(x.norm()) +
                         ", ||y||=" + std::to_string(y.norm()));
  }
}

Vector eval_grad(const BilevelProblem& problem, Channel which, const Vector& x, const Vector& y,
                 const SampleToken* token) {
  Vector out;
  eval_grad_into(problem, which, x, y, token, out);
  return out;
}

SampleToken draw_token(RngStream& stream, std::uint32_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  return stream.next_token(batch_size);
}

}  // namespace f2sa
