#include "f2sa/quadratic.hpp"

#include <cmath>
#include <random>

#include "f2sa/error.hpp"

namespace f2sa {

namespace {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

std::uint64_t channel_salt(Channel c) { return static_cast<std::uint64_t>(c) + 1; }

}  // namespace

QuadraticBilevel::QuadraticBilevel(QuadraticSpec spec) : spec_(std::move(spec)) {
  const auto dx = spec_.B_f.rows();
  const auto dy = spec_.A_g.rows();
  if (dx < 1 || dy < 1) throw InvalidArgument("quadratic problem needs positive dimensions");
  if (dx > 16) throw InvalidArgument("local constants enumerate the box vertices; d_x must be at most 16");
  auto shape = [](const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c) throw InvalidArgument(std::string("quadratic coefficient ") + name + " has the wrong shape");
  };
  shape(spec_.A_f, dy, dy, "A_f");
  shape(spec_.B_f, dx, dx, "B_f");
  shape(spec_.C_f, dx, dy, "C_f");
  shape(spec_.A_g, dy, dy, "A_g");
  shape(spec_.P, dy, dx, "P");
  if (spec_.b_x.size() != dx || spec_.b_y.size() != dy || spec_.p.size() != dy) {
    throw InvalidArgument("quadratic linear terms have the wrong size");
  }
  if (!(spec_.box > 0.0)) throw InvalidArgument("box radius must be positive");
  if (spec_.sigma_f < 0.0 || spec_.sigma_g < 0.0) throw InvalidArgument("noise levels must be nonnegative");
  if ((spec_.A_g - spec_.A_g.transpose()).norm() > 1e-12 * (1.0 + spec_.A_g.norm())) {
    throw InvalidArgument("A_g must be symmetric");
  }
  Eigen::LLT<Matrix> llt(spec_.A_g);
  if (llt.info() != Eigen::Success) throw InvalidArgument("A_g must be positive definite");

  const Matrix& P = spec_.P;
  Q_ = spec_.B_f + P.transpose() * spec_.A_f * P + spec_.C_f * P + P.transpose() * spec_.C_f.transpose();
  Q_ = 0.5 * (Q_ + Q_.transpose());
  q_ = spec_.b_x + P.transpose() * (spec_.A_f * spec_.p + spec_.b_y) + spec_.C_f * spec_.p;
  F0_ = 0.5 * spec_.p.dot(spec_.A_f * spec_.p) + spec_.b_y.dot(spec_.p) + spec_.c0;
  compute_constants();
}

void QuadraticBilevel::gradient(Channel which, const Vector& x, const Vector& y, const SampleToken* token,
                                Vector& out) const {
  const QuadraticSpec& s = spec_;
  switch (which) {
    case Channel::fx: out = s.B_f * x + s.C_f * y + s.b_x; break;
    case Channel::fy: out = s.A_f * y + s.C_f.transpose() * x + s.b_y; break;
    case Channel::gx: out = -(s.P.transpose() * (s.A_g * (y - s.P * x - s.p))); break;
    case Channel::gy: out = s.A_g * (y - s.P * x - s.p); break;
  }
  if (!token) return;
  const bool upper = which == Channel::fx || which == Channel::fy;
  double sigma = 0.0;
  if (s.regime == NoiseRegime::BothNoisy) sigma = upper ? s.sigma_f : s.sigma_g;
  if (s.regime == NoiseRegime::UpperOnly && upper) sigma = s.sigma_f;
  if (sigma == 0.0) return;
  const double sd = sigma / std::sqrt(static_cast<double>(dim_x() + dim_y()) * token->batch);
  SplitMix64 engine = token->engine(channel_salt(which));
  std::normal_distribution<double> normal(0.0, sd);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += normal(engine);
}

std::optional<double> QuadraticBilevel::upper_value(const Vector& x, const Vector& y) const {
  const QuadraticSpec& s = spec_;
  return 0.5 * y.dot(s.A_f * y) + 0.5 * x.dot(s.B_f * x) + x.dot(s.C_f * y) + s.b_x.dot(x) + s.b_y.dot(y) + s.c0;
}

std::optional<double> QuadraticBilevel::lower_value(const Vector& x, const Vector& y) const {
  const Vector r = y - spec_.P * x - spec_.p;
  return 0.5 * r.dot(spec_.A_g * r);
}

Vector QuadraticBilevel::y_star(const Vector& x) const { return spec_.P * x + spec_.p; }

Vector QuadraticBilevel::y_star_lambda(const Vector& x, double lambda) const {
  const QuadraticSpec& s = spec_;
  const Matrix H = s.A_f + lambda * s.A_g;
  const Vector rhs = lambda * (s.A_g * (s.P * x + s.p)) - s.C_f.transpose() * x - s.b_y;
  Eigen::LDLT<Matrix> ldlt(H);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw PreconditionViolation("f + lambda g is not strongly convex in y at lambda = " + std::to_string(lambda));
  }
  return ldlt.solve(rhs);
}

double QuadraticBilevel::F(const Vector& x) const { return 0.5 * x.dot(Q_ * x) + q_.dot(x) + F0_; }

Vector QuadraticBilevel::grad_F(const Vector& x) const { return Q_ * x + q_; }

Vector QuadraticBilevel::x_star() const {
  Eigen::LLT<Matrix> llt(Q_);
  if (llt.info() != Eigen::Success) throw PreconditionViolation("hyper-objective is not strongly convex");
  return -llt.solve(q_);
}

double QuadraticBilevel::F_star() const { return F(x_star()); }

Matrix QuadraticBilevel::hess_g_yy(const Vector&, const Vector&) const { return spec_.A_g; }

Matrix QuadraticBilevel::jac_g_xy(const Vector&, const Vector&) const {
  return -(spec_.P.transpose() * spec_.A_g);
}

std::vector<Vector> QuadraticBilevel::box_points() const {
  // Every norm sampled below is a convex function of x (the gradients and the
  // lower-level solutions are affine in x), so the box vertices attain the max.
  const int dx = dim_x();
  std::vector<Vector> pts;
  for (long mask = 0; mask < (1L << dx); ++mask) {
    Vector v(dx);
    for (int i = 0; i < dx; ++i) v[i] = (mask >> i & 1) ? spec_.box : -spec_.box;
    pts.push_back(v);
  }
  return pts;
}

void QuadraticBilevel::compute_constants() {
  const QuadraticSpec& s = spec_;
  const int dx = dim_x();
  const int dy = dim_y();
  RegularityConstants c;

  Matrix Hf(dx + dy, dx + dy);
  Hf << s.B_f, s.C_f, s.C_f.transpose(), s.A_f;
  c.l_f1 = spectral_norm(Hf);

  Matrix Hg(dx + dy, dx + dy);
  Hg << s.P.transpose() * s.A_g * s.P, -(s.P.transpose() * s.A_g), -(s.A_g * s.P), s.A_g;
  c.l_g1 = spectral_norm(Hg);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.A_g);
  c.mu_g = eig.eigenvalues().minCoeff();
  c.l_g2 = 0.0;
  c.l_f2 = 0.0;

  if (s.regime == NoiseRegime::BothNoisy) {
    c.sigma_f = s.sigma_f;
    c.sigma_g = s.sigma_g;
  } else if (s.regime == NoiseRegime::UpperOnly) {
    c.sigma_f = s.sigma_f;
  }

  const double thr = c.lambda_threshold();
  std::vector<double> lambdas;
  double lam = thr > 0.0 ? thr : 1.0;
  const double ratio = std::pow(2.0, 0.125);
  for (int i = 0; i <= 160; ++i, lam *= ratio) {
    // Below the threshold f + lambda g may fail to be convex in y.
    if (thr == 0.0 && i == 0) continue;
    lambdas.push_back(lam);
  }

  // dy*_lambda/dx = (A_f + lambda A_g)^{-1} (lambda A_g P - C_f'), tending to P.
  double l_lam = spectral_norm(s.P);
  for (double l : lambdas) {
    const Matrix H = s.A_f + l * s.A_g;
    l_lam = std::max(l_lam, spectral_norm(H.ldlt().solve(l * s.A_g * s.P - s.C_f.transpose())));
  }
  c.l_lambda0 = l_lam;

  double l_f0 = 0.0;
  double l_g0 = 0.0;
  Vector g;
  for (const Vector& x : box_points()) {
    std::vector<Vector> ys{y_star(x)};
    for (std::size_t i = 0; i < lambdas.size(); i += 8) ys.push_back(y_star_lambda(x, lambdas[i]));
    for (const Vector& y : ys) {
      gradient(Channel::fx, x, y, nullptr, g);
      l_f0 = std::max(l_f0, g.norm());
      gradient(Channel::fy, x, y, nullptr, g);
      l_f0 = std::max(l_f0, g.norm());
      gradient(Channel::gx, x, y, nullptr, g);
      l_g0 = std::max(l_g0, g.norm());
    }
  }
  c.l_f0 = l_f0;
  c.l_g0 = l_g0;
  c.validate();
  constants_ = c;
}

QuadraticBilevel make_scalar_quadratic(double y_target, NoiseRegime regime, double sigma, double box) {
  QuadraticSpec s;
  s.A_f = Matrix::Identity(1, 1);
  s.B_f = Matrix::Identity(1, 1);
  s.C_f = Matrix::Zero(1, 1);
  s.A_g = Matrix::Identity(1, 1);
  s.P = Matrix::Identity(1, 1);
  s.b_x = Vector::Zero(1);
  s.b_y = Vector::Constant(1, -y_target);
  s.p = Vector::Zero(1);
  s.c0 = 0.5 * y_target * y_target;
  s.box = box;
  s.regime = regime;
  s.sigma_f = sigma;
  s.sigma_g = sigma;
  return QuadraticBilevel(std::move(s));
}

QuadraticBilevel make_quadratic(int dx, int dy, std::uint64_t seed, double conditioning, NoiseRegime regime,
                                double sigma) {
  if (dx < 1 || dy < 1) throw InvalidArgument("dimensions must be positive");
  if (!(conditioning >= 1.0)) throw InvalidArgument("conditioning must be at least 1");
  SplitMix64 engine(hash_combine(seed, 0x9a4dULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](int r, int c) {
    Matrix m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal(engine);
    return m;
  };

  QuadraticSpec s;
  const Eigen::HouseholderQR<Matrix> qr(gaussian(dy, dy));
  const Matrix U = qr.householderQ();
  Vector spectrum(dy);
  for (int i = 0; i < dy; ++i) spectrum[i] = dy == 1 ? 1.0 : 1.0 + (conditioning - 1.0) * i / (dy - 1);
  if (dy == 1) spectrum[0] = 1.0;
  s.A_g = U * spectrum.asDiagonal() * U.transpose();
  s.A_g = 0.5 * (s.A_g + s.A_g.transpose());

  const Matrix Mf = gaussian(dy, dy);
  s.A_f = Mf.transpose() * Mf / (2.0 * dy);
  s.P = gaussian(dy, dx) * (0.5 / std::sqrt(static_cast<double>(dx * dy)));
  s.C_f = gaussian(dx, dy) * (0.3 / std::sqrt(static_cast<double>(dx * dy)));
  const double coupling = 2.0 * spectral_norm(s.C_f) * spectral_norm(s.P);
  const Matrix Mb = gaussian(dx, dx);
  s.B_f = Mb.transpose() * Mb / (2.0 * dx) + (0.5 + coupling) * Matrix::Identity(dx, dx);
  s.b_x = gaussian(dx, 1) * 0.5;
  s.b_y = gaussian(dy, 1) * 0.5;
  s.p = gaussian(dy, 1) * 0.5;
  s.c0 = 0.0;
  s.regime = regime;
  s.sigma_f = sigma;
  s.sigma_g = sigma;
  return QuadraticBilevel(std::move(s));
}

}  // namespace f2sa
