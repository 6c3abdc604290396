#include <doctest.h>

#include <cmath>
#include <cstring>

#include "f2sa/error.hpp"
#include "f2sa/f2sa_solver.hpp"
#include "f2sa/quadratic.hpp"
#include "f2sa/reference.hpp"

using namespace f2sa;

namespace {

ScheduleParams deterministic_params(const BilevelProblem& q) {
  ScheduleOverrides ov;
  ov.lambda0 = 2.0;
  return default_params(Algorithm::F2SA, NoiseRegime::Deterministic, q.constants(), ov);
}

RunOptions start_at(double x0, long K = 0) {
  RunOptions o;
  o.K = K;
  o.x0 = Vector::Constant(1, x0);
  return o;
}

bool same_trace(const Trace& a, const Trace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    for (const char* f : {"lambda", "alpha", "gamma", "grad_F_norm_sq", "proxy_norm", "dist_y", "dist_z"}) {
      const auto u = a.rows[i].field(f), v = b.rows[i].field(f);
      if (u.has_value() != v.has_value()) return false;
      if (u && std::memcmp(&*u, &*v, sizeof(double)) != 0) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("inner z step hand values") {
  auto q = make_scalar_quadratic();
  F2saSolver s(q, deterministic_params(q), start_at(1.0));
  s.mutable_state().z = Vector::Zero(1);
  s.mutable_state().schedule.gamma = 0.1;
  s.inner_z_step(0);
  CHECK(s.state().z[0] == doctest::Approx(0.1));

  // at the minimizer nothing moves
  s.mutable_state().z = q.y_star(s.state().x);
  s.inner_z_step(1);
  CHECK(s.state().z[0] == doctest::Approx(1.0).epsilon(1e-15));

  // gradient descent on a 1-strongly-convex, 1-smooth quadratic contracts by 1 - gamma
  s.mutable_state().z = Vector::Constant(1, -0.7);
  const double before = std::abs(s.state().z[0] - 1.0);
  s.inner_z_step(2);
  CHECK(std::abs(s.state().z[0] - 1.0) == doctest::Approx((1.0 - 0.1) * before).epsilon(1e-14));
}

TEST_CASE("inner y step hand values") {
  auto q = make_scalar_quadratic();
  F2saSolver s(q, deterministic_params(q), start_at(1.0));
  SolverState& st = s.mutable_state();
  st.y = Vector::Zero(1);
  st.schedule.lambda = 3.0;
  st.schedule.alpha = 0.1;
  s.inner_y_step(0);
  CHECK(s.state().y[0] == doctest::Approx(0.3));

  st.y = Vector::Constant(1, 3.0 / 4.0);  // y*_lambda(1) for lambda = 3
  s.inner_y_step(1);
  CHECK(s.state().y[0] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("outer x step directions") {
  auto q = make_scalar_quadratic();
  const auto p = deterministic_params(q);
  F2saSolver s(q, p, start_at(1.0));
  SolverState& st = s.mutable_state();
  st.schedule.lambda = 3.0;
  st.schedule.alpha = 0.01;

  // y = z: only grad_x f = x remains
  st.y = Vector::Constant(1, 0.4);
  st.z = Vector::Constant(1, 0.4);
  s.outer_x_step();
  CHECK(s.state().x[0] == doctest::Approx(1.0 - p.xi * 0.01 * 1.0).epsilon(1e-14));

  // y = y*_lambda, z = y*: direction is x + lambda x / (1 + lambda)
  st.x = Vector::Constant(1, 1.0);
  st.y = q.y_star_lambda(st.x, 3.0);
  st.z = q.y_star(st.x);
  s.outer_x_step();
  CHECK(s.state().x[0] == doctest::Approx(1.0 - p.xi * 0.01 * 1.75).epsilon(1e-14));
  CHECK(proxy_gradient(q, Vector::Constant(1, 1.0), 3.0, q.y_star_lambda(Vector::Constant(1, 1.0), 3.0),
                       q.y_star(Vector::Constant(1, 1.0)))[0] == doctest::Approx(1.75));

  // at x* = 0 with y, z at their limits the step vanishes
  st.x = Vector::Zero(1);
  st.y = q.y_star_lambda(st.x, 3.0);
  st.z = q.y_star(st.x);
  s.outer_x_step();
  CHECK(s.state().x[0] == 0.0);
}

TEST_CASE("inner index must be below T") {
  auto q = make_scalar_quadratic();
  F2saSolver s(q, deterministic_params(q), start_at(1.0));
  CHECK_THROWS_AS(s.inner_z_step(s.params().T), PreconditionViolation);
  CHECK_THROWS_AS(s.inner_y_step(-1), PreconditionViolation);
}

TEST_CASE("K = 0 returns the initial state and an empty trace") {
  auto q = make_scalar_quadratic();
  const RunResult r = f2sa_run(q, deterministic_params(q), start_at(1.5));
  CHECK(r.trace.rows.empty());
  CHECK(r.final_state.x[0] == 1.5);
  CHECK(r.final_state.k == 0);
  CHECK(r.R == -1);
  CHECK(r.status == RunStatus::Ok);
  CHECK_THROWS_AS(f2sa_run(q, deterministic_params(q), start_at(1.5, -1)), InvalidArgument);
}

TEST_CASE("seeded runs are bitwise reproducible") {
  auto q = make_quadratic(2, 2, 21, 2.0, NoiseRegime::BothNoisy, 0.1);
  const auto p = default_params(Algorithm::F2SA, NoiseRegime::BothNoisy, q.constants());
  RunOptions o;
  o.K = 300;
  o.seed = 5;
  o.cadence = 10;
  const RunResult a = f2sa_run(q, p, o), b = f2sa_run(q, p, o);
  CHECK(same_trace(a.trace, b.trace));
  CHECK(std::memcmp(a.final_state.x.data(), b.final_state.x.data(), sizeof(double) * 2) == 0);
  o.seed = 6;
  const RunResult c = f2sa_run(q, p, o);
  CHECK_FALSE(same_trace(a.trace, c.trace));
}

TEST_CASE("trace completeness and evaluation index") {
  auto q = make_scalar_quadratic(1.0);
  for (long K : {1L, 7L, 100L, 1000L}) {
    for (long cadence : {0L, 1L, 3L, 50L}) {
      RunOptions o = start_at(2.0, K);
      o.cadence = cadence;
      o.seed = static_cast<std::uint64_t>(K + cadence);
      const RunResult r = f2sa_run(q, deterministic_params(q), o);
      const long eff = effective_cadence(K, cadence);
      CHECK(static_cast<long>(r.trace.rows.size()) == 1 + K / eff);
      CHECK(r.R >= 0);
      CHECK(r.R < K);
      for (std::size_t i = 1; i < r.trace.rows.size(); ++i) CHECK(r.trace.rows[i].k > r.trace.rows[i - 1].k);
    }
  }
  CHECK(effective_cadence(100000, 0) == 500);
  CHECK(effective_cadence(201, 0) == 2);
}

TEST_CASE("inner loops contract on deterministic quadratics") {
  for (const auto& q : {make_scalar_quadratic(1.0), make_quadratic(2, 3, 31, 4.0)}) {
    const auto p = default_params(Algorithm::F2SA, NoiseRegime::Deterministic, q.constants());
    RunOptions o;
    o.x0 = Vector::Constant(q.dim_x(), 1.5);
    F2saSolver s(q, p, o);
    const double l_g1 = q.constants().l_g1;
    long checked = 0;
    for (int k = 0; k < 200; ++k) {
      const auto& st = s.state();
      REQUIRE(st.schedule.beta <= 1.0 / (8.0 * l_g1));
      REQUIRE(st.schedule.gamma <= 1.0 / (4.0 * l_g1));
      const Vector ys = q.y_star(st.x), yl = q.y_star_lambda(st.x, st.schedule.lambda);
      for (int t = 0; t < p.T; ++t) {
        const double dz = (st.z - ys).norm(), dy = (st.y - yl).norm();
        s.inner_z_step(t);
        s.inner_y_step(t);
        const double dz1 = (st.z - ys).norm(), dy1 = (st.y - yl).norm();
        if (dz1 > 1e-14) REQUIRE(dz1 < dz);
        if (dy1 > 1e-14) REQUIRE(dy1 < dy);
        ++checked;
      }
      s.outer_x_step();
      s.advance_schedule();
      REQUIRE(s.state().schedule.k == s.state().k);
    }
    CHECK(checked == 200L * p.T);
  }
}

TEST_CASE("lower iterates track within O(1/lambda) and the potential stays bounded") {
  auto q = make_scalar_quadratic(1.0);
  RunOptions o = start_at(2.0, 20000);
  double at_100_y = 0, at_100_z = 0, max_y = 0, max_z = 0;
  o.on_iteration = [&](const SolverState& st) {
    const double ty = st.schedule.lambda * (st.y - q.y_star_lambda(st.x, st.schedule.lambda)).norm();
    const double tz = st.schedule.lambda * (st.z - q.y_star(st.x)).norm();
    if (st.k == 100) {
      at_100_y = ty;
      at_100_z = tz;
    }
    if (st.k >= 100) {
      max_y = std::max(max_y, ty);
      max_z = std::max(max_z, tz);
    }
  };
  o.cadence = 100;
  const RunResult r = f2sa_run(q, deterministic_params(q), o);
  REQUIRE(r.status == RunStatus::Ok);
  CHECK(r.warnings.empty());
  CHECK(at_100_y > 0.0);
  CHECK(max_y <= 10.0 * at_100_y);
  CHECK(max_z <= 10.0 * at_100_z);
  const double v0 = *r.trace.rows.front().potential;
  for (const auto& row : r.trace.rows) {
    REQUIRE(row.potential.has_value());
    CHECK(*row.potential <= 2.0 * v0);
  }
  CHECK(*r.trace.rows.back().grad_F_norm_sq < *r.trace.rows.front().grad_F_norm_sq);
}

TEST_CASE("divergent configurations abort with a partial trace") {
  auto q = make_scalar_quadratic(1.0);
  ScheduleOverrides ov;
  ov.lambda0 = 2.0;
  ov.xi = 1e4;
  ov.k0 = 256.0;  // keep the step size from shrinking to compensate for xi
  const auto p = default_params(Algorithm::F2SA, NoiseRegime::Deterministic, q.constants(), ov);
  RunOptions o = start_at(2.0, 5000);
  o.cadence = 1;
  const RunResult r = f2sa_run(q, p, o);
  CHECK_FALSE(r.warnings.empty());  // the outer step cap is violated at k = 0
  CHECK(r.status == RunStatus::NumericFailure);
  CHECK(r.message.find("k=") != std::string::npos);
  CHECK(r.trace.rows.size() < 5001);
  CHECK_FALSE(r.trace.rows.empty());
}

TEST_CASE("guard_iterate limits") {
  CHECK_NOTHROW(guard_iterate(Vector::Constant(2, 1e11), "x", 3));
  CHECK_THROWS_AS(guard_iterate(Vector::Constant(1, 2e12), "x", 3), NumericFailure);
  Vector v = Vector::Zero(2);
  v[1] = std::nan("");
  try {
    guard_iterate(v, "y", 4, 2);
    FAIL("expected NumericFailure");
  } catch (const NumericFailure& e) {
    CHECK(e.k() == 4);
    CHECK(e.t() == 2);
  }
}

TEST_CASE("evaluation index is uniform and independent of the sample stream") {
  std::vector<int> counts(10, 0);
  for (std::uint64_t seed = 0; seed < 20000; ++seed) ++counts[draw_evaluation_index(seed, 10)];
  for (int c : counts) CHECK(std::abs(c - 2000) < 5 * std::sqrt(2000.0));
  CHECK(draw_evaluation_index(3, 0) == -1);
}
