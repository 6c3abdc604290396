#include "f2sa/hypercleaning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "f2sa/error.hpp"

namespace f2sa {

namespace {

constexpr std::uint64_t kTrainSalt = 1;
constexpr std::uint64_t kValidationSalt = 2;

double sigmoid(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

double max_eigenvalue(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace

HypercleaningProblem::HypercleaningProblem(const Dataset& train, const Dataset& validation, Options options)
    : options_(options) {
  if (!(options_.c > 0.0)) throw InvalidArgument("regularization c must be positive");
  if (train.size() < 1 || validation.size() < 1) throw InvalidArgument("hypercleaning needs nonempty data sets");
  if (train.dim() != validation.dim()) throw InvalidArgument("train and validation feature dimensions differ");
  if (train.num_classes != validation.num_classes || train.num_classes < 2) {
    throw InvalidArgument("train and validation must share a class count of at least 2");
  }
  n_ = train.size();
  m_ = validation.size();
  d_ = train.dim();
  classes_ = train.num_classes;
  const Eigen::RowVectorXd mean = train.features.colwise().mean();
  X_train_ = (train.features.rowwise() - mean).transpose();
  X_val_ = (validation.features.rowwise() - mean).transpose();
  y_train_ = train.labels;
  y_val_ = validation.labels;
  compute_constants();
}

Matrix HypercleaningProblem::as_matrix(const Vector& y) const { return Eigen::Map<const Matrix>(y.data(), d_, classes_); }

Vector HypercleaningProblem::flatten(const Matrix& W) const { return Eigen::Map<const Vector>(W.data(), W.size()); }

std::vector<int> HypercleaningProblem::batch_indices(const SampleToken& token, long size, std::uint64_t salt) {
  const long B = token.batch;
  if (B > size) {
    throw InvalidArgument("batch size " + std::to_string(B) + " exceeds the population of " + std::to_string(size));
  }
  std::vector<int> out;
  out.reserve(B);
  if (B == size) {
    for (long i = 0; i < size; ++i) out.push_back(static_cast<int>(i));
    return out;
  }
  // Floyd's sampling without replacement.
  SplitMix64 engine = token.engine(salt);
  for (long j = size - B; j < size; ++j) {
    std::uniform_int_distribution<long> pick(0, j);
    const int t = static_cast<int>(pick(engine));
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(static_cast<int>(j));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void HypercleaningProblem::gradient(Channel which, const Vector& x, const Vector& y, const SampleToken* token,
                                    Vector& out) const {
  const Matrix W = as_matrix(y);
  const bool upper = which == Channel::fx || which == Channel::fy;
  const bool sampled = token != nullptr && (options_.regime == NoiseRegime::BothNoisy ||
                                            (options_.regime == NoiseRegime::UpperOnly && upper));
  switch (which) {
    case Channel::fx:
      out = Vector::Zero(n_);
      return;
    case Channel::fy: {
      std::vector<int> rows;
      double scale = 1.0;
      if (sampled) {
        rows = batch_indices(*token, m_, kValidationSalt);
        scale = static_cast<double>(m_) / rows.size();
      }
      kernels::Batch b{rows, {}};
      out = scale * flatten(kernels::loss_and_grad(options_.backend, X_val_, y_val_, W, b).grad);
      return;
    }
    case Channel::gy: {
      std::vector<int> rows;
      double scale = 1.0;
      if (sampled) {
        rows = batch_indices(*token, n_, kTrainSalt);
        scale = static_cast<double>(n_) / rows.size();
      }
      std::vector<double> weights;
      if (rows.empty()) {
        weights.resize(n_);
        for (long i = 0; i < n_; ++i) weights[i] = sigmoid(x[i]);
      } else {
        for (int i : rows) weights.push_back(sigmoid(x[i]));
      }
      kernels::Batch b{rows, weights};
      out = scale * flatten(kernels::loss_and_grad(options_.backend, X_train_, y_train_, W, b).grad) +
            2.0 * options_.c * y;
      return;
    }
    case Channel::gx: {
      out = Vector::Zero(n_);
      if (sampled) {
        const std::vector<int> rows = batch_indices(*token, n_, kTrainSalt);
        const double scale = static_cast<double>(n_) / rows.size();
        const Vector losses = kernels::per_example_loss(options_.backend, X_train_, y_train_, W, rows);
        for (std::size_t j = 0; j < rows.size(); ++j) {
          const double s = sigmoid(x[rows[j]]);
          out[rows[j]] = scale * s * (1.0 - s) * losses[j];
        }
      } else {
        const Vector losses = kernels::per_example_loss(options_.backend, X_train_, y_train_, W);
        for (long i = 0; i < n_; ++i) {
          const double s = sigmoid(x[i]);
          out[i] = s * (1.0 - s) * losses[i];
        }
      }
      return;
    }
  }
}

std::optional<double> HypercleaningProblem::upper_value(const Vector&, const Vector& y) const {
  return kernels::loss_and_grad(options_.backend, X_val_, y_val_, as_matrix(y)).loss;
}

std::optional<double> HypercleaningProblem::lower_value(const Vector& x, const Vector& y) const {
  std::vector<double> weights(n_);
  for (long i = 0; i < n_; ++i) weights[i] = sigmoid(x[i]);
  kernels::Batch b{{}, weights};
  return kernels::loss_and_grad(options_.backend, X_train_, y_train_, as_matrix(y), b).loss +
         options_.c * y.squaredNorm();
}

std::optional<DatasetLosses> HypercleaningProblem::dataset_losses(const Vector&, const Vector& y) const {
  const Matrix W = as_matrix(y);
  DatasetLosses out;
  out.train = kernels::loss_and_grad(options_.backend, X_train_, y_train_, W).loss / n_;
  out.validation = kernels::loss_and_grad(options_.backend, X_val_, y_val_, W).loss / m_;
  return out;
}

double HypercleaningProblem::validation_loss(const Vector& y) const {
  return kernels::loss_and_grad(options_.backend, X_val_, y_val_, as_matrix(y)).loss / m_;
}

Matrix HypercleaningProblem::hess_g_yy(const Vector& x, const Vector& y) const {
  Vector weights(n_);
  for (long i = 0; i < n_; ++i) weights[i] = sigmoid(x[i]);
  Matrix H = kernels::hessian(options_.backend, X_train_, y_train_, as_matrix(y), weights);
  H.diagonal().array() += 2.0 * options_.c;
  return H;
}

Matrix HypercleaningProblem::jac_g_xy(const Vector& x, const Vector& y) const {
  Matrix J = kernels::per_example_grads(options_.backend, X_train_, y_train_, as_matrix(y));
  for (long i = 0; i < n_; ++i) {
    const double s = sigmoid(x[i]);
    J.row(i) *= s * (1.0 - s);
  }
  return J;
}

Vector HypercleaningProblem::unit_weight_solution() const {
  const Vector ones = Vector::Ones(n_);
  std::vector<double> w(n_, 1.0);
  const kernels::Batch all{{}, w};
  auto objective = [&](const Vector& y) {
    return kernels::loss_and_grad(options_.backend, X_train_, y_train_, as_matrix(y), all).loss +
           options_.c * y.squaredNorm();
  };
  Vector y = Vector::Zero(dim_y());
  for (int it = 0; it < 200; ++it) {
    const Matrix W = as_matrix(y);
    const Vector g = flatten(kernels::loss_and_grad(options_.backend, X_train_, y_train_, W, all).grad) +
                     2.0 * options_.c * y;
    if (g.norm() <= 1e-10) return y;
    Matrix H = kernels::hessian(options_.backend, X_train_, y_train_, W, ones);
    H.diagonal().array() += 2.0 * options_.c;
    const Vector dir = H.llt().solve(g);
    const double base = objective(y);
    double t = 1.0;
    while (t > 1e-12 && !(objective(y - t * dir) <= base - 1e-4 * t * g.dot(dir))) t *= 0.5;
    if (t <= 1e-12) return y;
    y -= t * dir;
  }
  return y;
}

void HypercleaningProblem::compute_constants() {
  RegularityConstants c;
  const double reg = 2.0 * options_.c;
  c.mu_g = reg;
  // The softmax cross-entropy Hessian is bounded by 1/2 times x x'.
  c.l_g1 = 0.5 * max_eigenvalue(X_train_ * X_train_.transpose()) + reg;
  c.l_f1 = 0.5 * max_eigenvalue(X_val_ * X_val_.transpose());
  c.l_g2 = 0.0;
  c.l_f2 = 0.0;
  c.l_lambda0 = 1.0;

  // Gradient magnitudes and single-example sampling spread at the reference
  // point x = 0, W = 0.
  const Vector x0 = Vector::Zero(n_);
  const Vector y0 = Vector::Zero(dim_y());
  Vector gf, gy, gx;
  gradient(Channel::fy, x0, y0, nullptr, gf);
  gradient(Channel::gx, x0, y0, nullptr, gx);
  gradient(Channel::gy, x0, y0, nullptr, gy);
  c.l_f0 = gf.norm();
  c.l_g0 = gx.norm();

  const Matrix W0 = as_matrix(y0);
  const Matrix Gv = kernels::per_example_grads(options_.backend, X_val_, y_val_, W0);
  const Matrix Gt = kernels::per_example_grads(options_.backend, X_train_, y_train_, W0);
  const Vector lt = kernels::per_example_loss(options_.backend, X_train_, y_train_, W0);
  double vf = 0.0;
  for (long j = 0; j < m_; ++j) vf += (static_cast<double>(m_) * Gv.row(j).transpose() - gf).squaredNorm();
  double vg = 0.0;
  for (long i = 0; i < n_; ++i) {
    vg += (static_cast<double>(n_) * 0.5 * Gt.row(i).transpose() - gy).squaredNorm();
    vg += std::pow(static_cast<double>(n_) * 0.25 * lt[i], 2);
  }
  c.sigma_f = std::sqrt(vf / m_);
  c.sigma_g = std::sqrt(std::max(0.0, vg / n_ - gx.squaredNorm()));
  c.validate();
  constants_ = c;
}

HypercleaningInstance make_hypercleaning_instance(const HypercleaningSetup& s) {
  if (s.n < 1 || s.m < 1) throw InvalidArgument("train and validation sizes must be positive");
  HypercleaningInstance out;
  out.train = make_blobs(s.n, s.d, s.classes, s.spread, s.data_seed, hash_combine(s.data_seed, 1),
                         s.center_width);
  out.validation = make_blobs(s.m, s.d, s.classes, s.spread, s.data_seed, hash_combine(s.data_seed, 2),
                              s.center_width);
  Corruption corr = corrupt_labels(out.train.labels, s.corruption, s.classes, hash_combine(s.data_seed, 3));
  out.train.labels = std::move(corr.labels);
  out.corrupted = std::move(corr.mask);
  return out;
}

}  // namespace f2sa
