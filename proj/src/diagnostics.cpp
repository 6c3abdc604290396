#include "f2sa/diagnostics.hpp"

#include <cmath>
#include <random>

#include "f2sa/error.hpp"
#include "f2sa/reference.hpp"

namespace f2sa {

std::string_view to_string(GradFMode m) {
  switch (m) {
    case GradFMode::Auto: return "auto";
    case GradFMode::Exact: return "exact";
    case GradFMode::FiniteDifference: return "fd";
    case GradFMode::Off: return "off";
  }
  return "?";
}

GradFMode grad_f_mode_from_string(std::string_view s) {
  if (s == "auto") return GradFMode::Auto;
  if (s == "exact") return GradFMode::Exact;
  if (s == "fd") return GradFMode::FiniteDifference;
  if (s == "off") return GradFMode::Off;
  throw InvalidArgument("unknown grad_F mode '" + std::string(s) + "'");
}

long effective_cadence(long K, long cadence) {
  if (cadence > 0) return cadence;
  return std::max(1L, (K + 199) / 200);
}

long draw_evaluation_index(std::uint64_t seed, long K) {
  if (K <= 0) return -1;
  SplitMix64 engine(hash_combine(seed, 0xe7a1ULL));
  std::uniform_int_distribution<long> pick(0, K - 1);
  return pick(engine);
}

void guard_iterate(const Vector& v, const char* name, long k, long t) {
  if (!v.allFinite()) throw NumericFailure(std::string("non-finite iterate ") + name, k, t);
  const double n = v.norm();
  if (n > 1e12) throw NumericFailure(std::string("iterate ") + name + " diverged, norm " + std::to_string(n), k, t);
}

std::optional<double> hypergradient_norm_sq(const BilevelProblem& problem, const Vector& x, GradFMode mode,
                                            const Vector* warm_start, std::string& source) {
  source = "none";
  if (mode == GradFMode::Off) return std::nullopt;
  const bool exact_ok = problem.analytics() != nullptr || problem.second_order() != nullptr;
  if ((mode == GradFMode::Auto || mode == GradFMode::Exact) && exact_ok) {
    Vector g = problem.analytics() ? problem.analytics()->grad_F(x) : reference_hypergradient(problem, x, warm_start);
    source = "exact";
    return g.squaredNorm();
  }
  if (mode == GradFMode::Exact) return std::nullopt;
  if (!problem.upper_value(x, Vector::Zero(problem.dim_y()))) return std::nullopt;
  // The lower solve is warm-started from the same point at every probe so the
  // differences are not polluted by solver path effects.
  Vector start = warm_start ? *warm_start : Vector::Zero(problem.dim_y());
  start = solve_lower(problem, x, &start);
  auto map = [&](const Vector& p) { return hyper_objective(problem, p, &start); };
  const double h = 1e-5 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  Vector g = finite_difference_grad(map, x, h);
  source = "fd";
  return g.squaredNorm();
}

double potential_value(const BilevelProblem& problem, const Vector& x, const Vector& y, const Vector& z,
                       double lambda) {
  const ProblemAnalytics* an = problem.analytics();
  if (!an) throw PreconditionViolation("potential requires closed-form analytics");
  const double l_g1 = problem.constants().l_g1;
  return (an->F(x) - an->F_star()) + l_g1 * lambda * (y - an->y_star_lambda(x, lambda)).squaredNorm() +
         0.5 * lambda * l_g1 * (z - an->y_star(x)).squaredNorm();
}

TraceRecord checkpoint_record(const BilevelProblem& problem, const SolverState& state, const Vector& model,
                              bool with_eta, GradFMode mode) {
  TraceRecord r;
  const ScheduleState& s = state.schedule;
  r.k = state.k;
  r.lambda = s.lambda;
  r.alpha = s.alpha;
  r.gamma = s.gamma;
  if (with_eta) r.eta = s.eta;
  r.grad_F_norm_sq = hypergradient_norm_sq(problem, state.x, mode, &state.z, r.grad_F_source);

  Vector fx = eval_grad(problem, Channel::fx, state.x, state.y);
  Vector gxy = eval_grad(problem, Channel::gx, state.x, state.y);
  Vector gxz = eval_grad(problem, Channel::gx, state.x, state.z);
  r.proxy_norm = (fx + s.lambda * (gxy - gxz)).norm();

  if (const ProblemAnalytics* an = problem.analytics()) {
    r.dist_y = (state.y - an->y_star_lambda(state.x, s.lambda)).norm();
    r.dist_z = (state.z - an->y_star(state.x)).norm();
    r.potential = potential_value(problem, state.x, state.y, state.z, s.lambda);
  }
  if (auto losses = problem.dataset_losses(state.x, model)) {
    r.train_loss = losses->train;
    r.val_loss = losses->validation;
  }
  return r;
}

}  // namespace f2sa
