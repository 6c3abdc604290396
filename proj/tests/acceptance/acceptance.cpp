// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "f2sa/analysis.hpp"
#include "f2sa/error.hpp"
#include "f2sa/f2sa_solver.hpp"
#include "f2sa/f3sa_solver.hpp"
#include "f2sa/hypercleaning.hpp"
#include "f2sa/quadratic.hpp"
#include "f2sa/reference.hpp"
#include "f2sa/verification.hpp"

using namespace f2sa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunResult run(Algorithm alg, const BilevelProblem& p, const ScheduleParams& params, const RunOptions& o) {
  return alg == Algorithm::F2SA ? f2sa_run(p, params, o) : f3sa_run(p, params, o);
}

// 1: closed-form hypergradient against finite differences
Outcome hypergradient_fd() {
  const CheckResult r = check_hypergradient_fd(100, 1);
  return {r.passed && r.cases == 100 && r.worst <= 1e-5,
          "instances=" + std::to_string(r.cases) + " worst_rel_err=" + fmt("%.3g", r.worst) + " limit=1e-5"};
}

// 2: bias of the penalty surrogate stays below C_lambda / lambda
Outcome bias_grid() {
  long cases = 0, violations = 0;
  double worst = 0.0;
  for (const auto& p : builtin_analytic_problems()) {
    const CheckResult r = check_bias_grid(*p);
    cases += r.cases;
    violations += r.violations;
    worst = std::max(worst, r.worst);
  }
  return {violations == 0 && cases > 0, "cases=" + std::to_string(cases) + " violations=" +
                                            std::to_string(violations) + " worst_bias/bound=" + fmt("%.3g", worst)};
}

// 3: lambda = gamma / (2 alpha) and every step-size condition along the F2SA default schedule
Outcome schedule_conditions() {
  double worst = 0.0;
  long violations = 0, checked = 0;
  for (const auto& q : {make_scalar_quadratic(1.0), make_quadratic(2, 2, 11, 1.0), make_quadratic(3, 2, 12, 5.0)}) {
    const auto& c = q.constants();
    for (NoiseRegime r : {NoiseRegime::Deterministic, NoiseRegime::UpperOnly, NoiseRegime::BothNoisy}) {
      const auto p = default_params(Algorithm::F2SA, r, c);
      ScheduleState s = make_schedule(p, c);
      for (long k = 0; k <= 100000; ++k) {
        worst = std::max(worst, std::abs(s.lambda - s.gamma / (2.0 * s.alpha)) / s.lambda);
        violations += static_cast<long>(check_theorem_conditions(s, p, c).size());
        ++checked;
        s = advance(s, p, c);
      }
    }
  }
  return {worst <= 1e-12 && violations == 0, "states=" + std::to_string(checked) + " max_rel_ratio_err=" +
                                                 fmt("%.2g", worst) + " violations=" + std::to_string(violations)};
}

ScheduleParams quadratic_params(Algorithm alg, NoiseRegime regime, const RegularityConstants& c) {
  ScheduleOverrides ov;
  ov.lambda0 = 2.0;
  if (alg == Algorithm::F2SA) ov.xi = 8.0;
  return default_params(alg, regime, c, ov);
}

// 4: deterministic rate on the shifted scalar quadratic
Outcome deterministic_rate() {
  auto q = make_scalar_quadratic(1.0);
  bool pass = true;
  std::string detail;
  for (Algorithm alg : {Algorithm::F2SA, Algorithm::F3SA}) {
    ScheduleOverrides ov;
    ov.lambda0 = 2.0;
    const auto p = default_params(alg, NoiseRegime::Deterministic, q.constants(), ov);
    RunOptions o;
    o.K = 100000;
    o.cadence = 500;
    o.x0 = Vector::Constant(1, 2.0);
    const RunResult r = run(alg, q, p, o);
    if (r.status != RunStatus::Ok) return {false, std::string(to_string(alg)) + ": " + r.message};
    const RateFit fit = fit_rate({r.trace}, 1000, 100000, "grad_F_norm_sq");
    const double first = *r.trace.rows.front().grad_F_norm_sq, last = *r.trace.rows.back().grad_F_norm_sq;
    const bool ok = fit.slope >= -1.0 && fit.slope <= -0.5 && last <= 1e-3 * first;
    pass = pass && ok;
    detail += std::string(to_string(alg)) + " slope=" + fmt("%.3f", fit.slope) + " gradF^2 " + fmt("%.3g", first) +
              "->" + fmt("%.3g", last) + "  ";
  }
  return {pass, detail + "(slope in [-1,-0.5], final <= 1e-3 initial)"};
}

// 5: stochastic rates, 20 seeds, sigma = 0.1
Outcome stochastic_rates() {
  struct Case {
    Algorithm alg;
    NoiseRegime regime;
    double expected;
  };
  const Case cases[] = {{Algorithm::F2SA, NoiseRegime::BothNoisy, -2.0 / 7.0},
                        {Algorithm::F2SA, NoiseRegime::UpperOnly, -2.0 / 5.0},
                        {Algorithm::F3SA, NoiseRegime::BothNoisy, -2.0 / 5.0},
                        {Algorithm::F3SA, NoiseRegime::UpperOnly, -1.0 / 2.0}};
  bool pass = true;
  std::string detail;
  double final_both[2] = {0.0, 0.0};
  for (const Case& cs : cases) {
    auto q = make_scalar_quadratic(1.0, cs.regime, 0.1);
    const auto p = quadratic_params(cs.alg, cs.regime, q.constants());
    std::vector<Trace> traces(20);
    std::vector<std::string> failures(20);
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < 20; ++s) {
      RunOptions o;
      o.K = 100000;
      o.cadence = 500;
      o.seed = static_cast<std::uint64_t>(s + 1);
      o.x0 = Vector::Constant(1, 2.0);
      const RunResult r = run(cs.alg, q, p, o);
      if (r.status != RunStatus::Ok) failures[s] = r.message;
      traces[s] = r.trace;
    }
    for (const auto& f : failures) {
      if (!f.empty()) return {false, f};
    }
    const RateFit fit = fit_rate(traces, 1000, 100000, "grad_F_norm_sq");
    double final_mean = 0.0;
    for (const auto& t : traces) final_mean += *t.rows.back().grad_F_norm_sq / 20.0;
    if (cs.regime == NoiseRegime::BothNoisy) final_both[cs.alg == Algorithm::F2SA ? 0 : 1] = final_mean;
    const bool ok = std::abs(fit.slope - cs.expected) <= 0.15;
    pass = pass && ok;
    detail += std::string(to_string(cs.alg)) + "/" + std::string(to_string(cs.regime)) + " slope=" +
              fmt("%.3f", fit.slope) + " (expect " + fmt("%.3f", cs.expected) + ")  ";
  }
  const bool ordered = final_both[1] <= final_both[0];
  detail += "BothNoisy final gradF^2 F2SA=" + fmt("%.3g", final_both[0]) + " F3SA=" + fmt("%.3g", final_both[1]);
  return {pass && ordered, detail};
}

// 6: unit momentum reproduces the single-inner-step double loop
Outcome reduction() {
  double worst = 0.0;
  for (NoiseRegime regime : {NoiseRegime::BothNoisy, NoiseRegime::UpperOnly, NoiseRegime::Deterministic}) {
    auto q = make_quadratic(3, 2, 41, 3.0, regime, 0.2);
    ScheduleOverrides ov;
    ov.force_unit_eta = true;
    const auto p = default_params(Algorithm::F3SA, regime, q.constants(), ov);
    RunOptions o;
    o.seed = 17;
    o.batch = 3;
    o.x0 = Vector::LinSpaced(3, 1.0, 0.25);
    o.grad_F = GradFMode::Off;
    o.share_x_token = true;
    F3saSolver m(q, p, o);
    F2saSolver d(q, p, o);
    for (int k = 0; k < 1000; ++k) {
      m.step();
      d.step();
      worst = std::max({worst, (m.state().x - d.state().x).cwiseAbs().maxCoeff(),
                        (m.state().y - d.state().y).cwiseAbs().maxCoeff(),
                        (m.state().z - d.state().z).cwiseAbs().maxCoeff()});
    }
  }
  return {worst <= 1e-12, "iterations=1000 x 3 regimes max_abs_diff=" + fmt("%.3g", worst) + " limit=1e-12"};
}

// 7: hypercleaning, F2SA against the unit-weight baseline
Outcome hypercleaning() {
  const HypercleaningSetup setup;  // n=2000, m=200, d=10, 4 classes, 30% corrupted
  const HypercleaningInstance inst = make_hypercleaning_instance(setup);
  HypercleaningProblem::Options ho;
  ho.regime = NoiseRegime::BothNoisy;
  const HypercleaningProblem h(inst.train, inst.validation, ho);
  const double nobo = h.validation_loss(h.unit_weight_solution());

  const double lambda0 = h.constants().lambda_threshold();
  const double step = 0.05, a = 5.0 / 7.0, c = 4.0 / 7.0, k0 = 1000.0;
  ScheduleOverrides ov;
  ov.a = a;
  ov.c = c;
  ov.k0 = k0;
  ov.lambda0 = lambda0;
  ov.xi = 10.0;
  ov.T = 10;
  ov.c_alpha = step / lambda0 * std::pow(k0, a);
  ov.c_gamma = step * std::pow(k0, c);
  const auto p = default_params(Algorithm::F2SA, NoiseRegime::BothNoisy, h.constants(), ov);

  const int seeds = 5;
  std::vector<double> finals(seeds, 0.0);
  std::vector<std::string> failures(seeds);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < seeds; ++s) {
    RunOptions o;
    o.K = 10000;
    o.seed = static_cast<std::uint64_t>(s + 1);
    o.batch = 50;
    o.share_x_token = true;
    o.grad_F = GradFMode::Off;
    const RunResult r = f2sa_run(h, p, o);
    if (r.status != RunStatus::Ok) failures[s] = r.message;
    finals[s] = hyper_objective(h, r.final_state.x) / static_cast<double>(h.validation_size());
  }
  for (const auto& f : failures) {
    if (!f.empty()) return {false, f};
  }
  double mean = 0.0;
  std::string per_seed;
  for (double v : finals) {
    mean += v / seeds;
    per_seed += fmt(" %.3f", v);
  }
  return {mean <= 0.95 * nobo, "F(x_K) seeds:" + per_seed + " mean=" + fmt("%.4f", mean) + " NoBO=" +
                                   fmt("%.4f", nobo) + " ratio=" + fmt("%.3f", mean / nobo) + " limit=0.95"};
}

// 8: replay determinism, unbiased oracles, inner contraction
Outcome oracle_and_inner() {
  std::string detail;
  // replay
  auto q = make_quadratic(2, 3, 21, 2.0, NoiseRegime::BothNoisy, 0.3);
  bool replay = true;
  for (Algorithm alg : {Algorithm::F2SA, Algorithm::F3SA}) {
    const auto p = default_params(alg, NoiseRegime::BothNoisy, q.constants());
    RunOptions o;
    o.K = 2000;
    o.seed = 99;
    o.cadence = 1;
    const RunResult r1 = run(alg, q, p, o), r2 = run(alg, q, p, o);
    replay = replay && trace_to_csv(r1.trace) == trace_to_csv(r2.trace) &&
             std::memcmp(r1.final_state.x.data(), r2.final_state.x.data(), sizeof(double) * q.dim_x()) == 0;
  }
  detail += std::string("replay=") + (replay ? "bitwise" : "DIFFERS");

  // unbiasedness: projection of the oracle error onto a fixed direction
  double worst_z = 0.0;
  {
    RngStream s(2024);
    const Vector x = Vector::LinSpaced(2, 0.2, -0.1), y = Vector::LinSpaced(3, 1.0, 0.5);
    for (Channel c : {Channel::fx, Channel::fy, Channel::gx, Channel::gy}) {
      const Vector exact = eval_grad(q, c, x, y);
      const Vector dir = Vector::LinSpaced(exact.size(), 1.0, -0.5).normalized();
      const int draws = 10000;
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < draws; ++i) {
        const SampleToken t = draw_token(s, 1);
        const double v = dir.dot(eval_grad(q, c, x, y, &t) - exact);
        sum += v;
        sq += v * v;
      }
      const double mean = sum / draws, se = std::sqrt((sq / draws - mean * mean) / draws);
      worst_z = std::max(worst_z, std::abs(mean) / se);
    }
  }
  detail += " max|mean|/se=" + fmt("%.2f", worst_z);

  // inner contraction on a deterministic instance
  long expanding = 0, steps = 0;
  {
    auto d = make_quadratic(2, 3, 31, 4.0);
    const auto p = default_params(Algorithm::F2SA, NoiseRegime::Deterministic, d.constants());
    RunOptions o;
    o.x0 = Vector::Constant(2, 1.5);
    F2saSolver s(d, p, o);
    for (int k = 0; k < 200; ++k) {
      const auto& st = s.state();
      const Vector ys = d.y_star(st.x), yl = d.y_star_lambda(st.x, st.schedule.lambda);
      for (int t = 0; t < p.T; ++t) {
        const double dz = (st.z - ys).norm(), dy = (st.y - yl).norm();
        s.inner_z_step(t);
        s.inner_y_step(t);
        const double dz1 = (st.z - ys).norm(), dy1 = (st.y - yl).norm();
        if ((dz1 > 1e-14 && dz1 >= dz) || (dy1 > 1e-14 && dy1 >= dy)) ++expanding;
        ++steps;
      }
      s.outer_x_step();
      s.advance_schedule();
    }
  }
  detail += " inner_steps=" + std::to_string(steps) + " non_contracting=" + std::to_string(expanding);
  return {replay && worst_z <= 3.0 && expanding == 0, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "hypergradient vs finite differences", hypergradient_fd},
      {2, "penalty bias bound", bias_grid},
      {3, "F2SA schedule invariant and step-size conditions", schedule_conditions},
      {4, "deterministic convergence rate", deterministic_rate},
      {5, "stochastic convergence rates", stochastic_rates},
      {6, "unit-momentum reduction", reduction},
      {7, "hypercleaning beats the unit-weight baseline", hypercleaning},
      {8, "replay, unbiased oracles, inner contraction", oracle_and_inner},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s | %s | %.1fs\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
