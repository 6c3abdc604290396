#include <doctest.h>

#include <cmath>
#include <random>

#include "f2sa/error.hpp"
#include "f2sa/hypercleaning.hpp"
#include "f2sa/quadratic.hpp"
#include "f2sa/reference.hpp"
#include "f2sa/verification.hpp"

using namespace f2sa;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<long>(v.size()));
  long i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset toy() {
  Dataset d;
  d.features.resize(3, 2);
  d.features << 0, 0, 1, 0, 0, 1;
  d.labels = {0, 1, 1};
  d.num_classes = 2;
  return d;
}

HypercleaningProblem small(NoiseRegime regime = NoiseRegime::BothNoisy) {
  HypercleaningSetup s;
  s.n = 150;
  s.m = 40;
  s.d = 4;
  s.classes = 3;
  s.data_seed = 5;
  auto inst = make_hypercleaning_instance(s);
  HypercleaningProblem::Options o;
  o.regime = regime;
  return HypercleaningProblem(inst.train, inst.validation, o);
}

}  // namespace

TEST_CASE("canonical scalar quadratic") {
  auto q = make_scalar_quadratic();
  for (double x : {-2.0, -0.3, 0.0, 1.0, 1.7}) {
    CHECK(q.grad_F(vec({x}))[0] == doctest::Approx(2.0 * x));
    CHECK(q.F(vec({x})) == doctest::Approx(x * x));
    CHECK(q.y_star(vec({x}))[0] == doctest::Approx(x));
    CHECK(q.y_star_lambda(vec({x}), 3.0)[0] == doctest::Approx(0.75 * x));
    CHECK(exact_hypergradient(q, vec({x}), q.y_star(vec({x})))[0] == doctest::Approx(2.0 * x));
  }
  CHECK(q.F_star() == 0.0);
  auto s = make_scalar_quadratic(1.0);
  CHECK(s.x_star()[0] == doctest::Approx(0.5));
  CHECK(s.F_star() == doctest::Approx(0.25));
}

TEST_CASE("decoupled quadratic") {
  QuadraticSpec s;
  s.A_f = Matrix::Identity(2, 2);
  s.B_f = vec({2.0, 3.0}).asDiagonal();
  s.C_f = Matrix::Zero(2, 2);
  s.A_g = Matrix::Identity(2, 2) * 2.0;
  s.P = Matrix::Zero(2, 2);
  s.b_x = Vector::Zero(2);
  s.b_y = Vector::Zero(2);
  s.p = vec({0.5, -1.0});
  QuadraticBilevel q(s);
  const double c = q.F(Vector::Zero(2));
  for (const Vector& x : {vec({1.0, 0.0}), vec({-0.5, 1.5})}) {
    CHECK(q.F(x) == doctest::Approx(0.5 * x.dot(s.B_f * x) + c));
    CHECK((q.grad_F(x) - s.B_f * x).norm() < 1e-14);
  }
}

TEST_CASE("conditioning is the ratio of the lower-level curvature bounds") {
  for (double cond : {1.0, 10.0, 100.0}) {
    auto q = make_quadratic(2, 3, 19, cond);
    Eigen::SelfAdjointEigenSolver<Matrix> es(q.spec().A_g);
    CHECK(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff() == doctest::Approx(cond).epsilon(1e-10));
    CHECK(q.constants().mu_g == doctest::Approx(es.eigenvalues().minCoeff()));
    CHECK(q.constants().l_g1 >= es.eigenvalues().maxCoeff() * (1.0 - 1e-12));
    CHECK(q.constants().l_lambda0 <= 3.0 * q.constants().l_g1 / q.constants().mu_g);
  }
  CHECK_THROWS_AS(make_quadratic(17, 1, 1), InvalidArgument);
}

TEST_CASE("analytic consistency and y*_lambda stationarity on built-in problems") {
  for (const auto& p : builtin_analytic_problems()) {
    const CheckResult a = check_analytic_consistency(*p);
    const CheckResult s = check_y_lambda_stationarity(*p);
    CHECK(a.passed);
    CHECK(a.worst <= 1e-10);
    CHECK(s.passed);
    CHECK(s.worst <= 1e-12);
    CHECK(check_bias_grid(*p).violations == 0);
    CHECK(check_y_lambda_lipschitz(*p).passed);
  }
}

TEST_CASE("hypercleaning toy gradients by hand") {
  // train = validation = three points, two classes, W = 0 so every softmax is uniform
  HypercleaningProblem::Options o;
  o.c = 0.01;
  HypercleaningProblem h(toy(), toy(), o);
  const Vector x = Vector::Zero(3), y = Vector::Zero(4);
  const double s6 = 1.0 / 6.0;
  CHECK((eval_grad(h, Channel::gy, x, y) - vec({s6, s6, -s6, -s6})).norm() <= 1e-12);
  CHECK((eval_grad(h, Channel::fy, x, y) - vec({2 * s6, 2 * s6, -2 * s6, -2 * s6})).norm() <= 1e-12);
  const double gx = 0.25 * std::log(2.0);
  CHECK((eval_grad(h, Channel::gx, x, y) - Vector::Constant(3, gx)).norm() <= 1e-12);
  CHECK(eval_grad(h, Channel::fx, x, y).norm() == 0.0);
  CHECK(*h.upper_value(x, y) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(*h.lower_value(x, y) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-14));
  // the regularizer contributes 2 c W exactly
  const Vector y1 = vec({0.3, -0.2, 0.1, 0.4});
  HypercleaningProblem::Options o2 = o;
  o2.c = 0.5;
  HypercleaningProblem h2(toy(), toy(), o2);
  CHECK((eval_grad(h2, Channel::gy, x, y1) - eval_grad(h, Channel::gy, x, y1) - 2.0 * 0.49 * y1).norm() <= 1e-12);
}

TEST_CASE("hypercleaning constants") {
  auto h = small();
  const auto& c = h.constants();
  CHECK(c.mu_g == doctest::Approx(2.0 * 0.01));
  CHECK(c.l_g1 >= c.mu_g);
  CHECK(c.l_lambda0 == 1.0);
  CHECK(c.sigma_f > 0.0);
  CHECK(c.sigma_g > 0.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("inner objective curvature is at least 2c") {
  auto h = small();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  const Vector x = Vector::LinSpaced(h.dim_x(), -3.0, 3.0);
  const Vector y = Vector::LinSpaced(h.dim_y(), -1.0, 1.0);
  const Matrix H = h.hess_g_yy(x, y);
  CHECK((H - H.transpose()).norm() <= 1e-12 * H.norm());
  double worst = 1e300;
  for (int i = 0; i < 50; ++i) {
    Vector v(h.dim_y());
    for (long j = 0; j < v.size(); ++j) v[j] = n01(rng);
    worst = std::min(worst, v.dot(H * v) / v.squaredNorm());
  }
  CHECK(worst >= 2.0 * 0.01 - 1e-9);
}

TEST_CASE("full batches reproduce the exact gradients") {
  auto h = small();
  RngStream s(4);
  const SampleToken full{s.next_token(150)};
  const Vector x = Vector::LinSpaced(h.dim_x(), -1.0, 1.0), y = Vector::LinSpaced(h.dim_y(), -0.2, 0.2);
  for (Channel c : {Channel::gx, Channel::gy}) {
    const Vector e = eval_grad(h, c, x, y);
    CHECK((eval_grad(h, c, x, y, &full) - e).norm() <= 1e-12 * (1.0 + e.norm()));
  }
  const SampleToken too_big = s.next_token(151);
  CHECK_THROWS_AS(eval_grad(h, Channel::gy, x, y, &too_big), InvalidArgument);
}

TEST_CASE("down-weighted examples drop out of the inner gradient") {
  auto h = small();
  Vector x = Vector::Zero(h.dim_x());
  const Vector y = Vector::LinSpaced(h.dim_y(), -0.2, 0.2);
  x[7] = -700.0;
  const Vector gone = eval_grad(h, Channel::gy, x, y);
  x[7] = -40.0;
  CHECK((eval_grad(h, Channel::gy, x, y) - gone).norm() <= 1e-14);
  x[7] = 0.0;
  CHECK((eval_grad(h, Channel::gy, x, y) - gone).norm() > 1e-3);
}

TEST_CASE("batch indices are sorted, distinct and replayable") {
  RngStream s(12);
  for (int rep = 0; rep < 200; ++rep) {
    const SampleToken t = s.next_token(50);
    const auto a = HypercleaningProblem::batch_indices(t, 200, 1);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 1; i < a.size(); ++i) REQUIRE(a[i] > a[i - 1]);
    REQUIRE(a.front() >= 0);
    REQUIRE(a.back() < 200);
    REQUIRE(a == HypercleaningProblem::batch_indices(t, 200, 1));
  }
}

TEST_CASE("label corruption of the synthetic instance is seed-reproducible") {
  HypercleaningSetup s;
  const auto a = make_hypercleaning_instance(s);
  const auto b = make_hypercleaning_instance(s);
  CHECK(a.train.labels == b.train.labels);
  CHECK(a.corrupted == b.corrupted);
  CHECK((a.train.features - b.train.features).norm() == 0.0);
  long flipped = 0;
  for (bool m : a.corrupted) flipped += m;
  CHECK(flipped > 500);
  CHECK(flipped < 700);
  CHECK(a.train.size() == 2000);
  CHECK(a.validation.size() == 200);
}

TEST_CASE("unit-weight solution is the lower-level minimizer at large weights") {
  auto h = small(NoiseRegime::Deterministic);
  const Vector w = h.unit_weight_solution();
  // sigmoid(x) -> 1 as x -> infinity
  const Vector x = Vector::Constant(h.dim_x(), 60.0);
  CHECK(eval_grad(h, Channel::gy, x, w).norm() <= 1e-8);
  CHECK(h.validation_loss(w) == doctest::Approx(*h.upper_value(x, w) / h.validation_size()));
}
