#include <cmath>

#include "f2sa/error.hpp"
#include "f2sa/kernels.hpp"

namespace f2sa::kernels {

std::string_view to_string(Backend b) { return b == Backend::Serial ? "serial" : "openmp"; }

Backend backend_from_string(std::string_view s) {
  if (s == "serial") return Backend::Serial;
  if (s == "openmp") return Backend::OpenMP;
  throw InvalidArgument("unknown kernel backend '" + std::string(s) + "'");
}

double softmax_into(const Vector& logits, Vector& p) {
  const double mx = logits.maxCoeff();
  p = (logits.array() - mx).exp();
  const double s = p.sum();
  p /= s;
  return mx + std::log(s);
}

LossGrad loss_and_grad(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W,
                       const Batch& batch) {
  return backend == Backend::Serial ? serial::loss_and_grad(X, labels, W, batch)
                                    : omp::loss_and_grad(X, labels, W, batch);
}

Vector per_example_loss(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W,
                        std::span<const int> rows) {
  return backend == Backend::Serial ? serial::per_example_loss(X, labels, W, rows)
                                    : omp::per_example_loss(X, labels, W, rows);
}

Matrix hessian(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W,
               const Vector& weights) {
  return backend == Backend::Serial ? serial::hessian(X, labels, W, weights)
                                    : omp::hessian(X, labels, W, weights);
}

Matrix per_example_grads(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W) {
  return backend == Backend::Serial ? serial::per_example_grads(X, labels, W) : omp::per_example_grads(X, labels, W);
}

namespace serial {

LossGrad loss_and_grad(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Batch& batch) {
  const bool all = batch.rows.empty();
  const long count = all ? X.cols() : static_cast<long>(batch.rows.size());
  LossGrad out;
  out.grad = Matrix::Zero(W.rows(), W.cols());
  Vector logits(W.cols()), p(W.cols());
  for (long j = 0; j < count; ++j) {
    const int i = all ? static_cast<int>(j) : batch.rows[j];
    const double w = batch.weights.empty() ? 1.0 : batch.weights[j];
    logits.noalias() = W.transpose() * X.col(i);
    const double lse = softmax_into(logits, p);
    out.loss += w * (lse - logits[labels[i]]);
    p[labels[i]] -= 1.0;
    out.grad.noalias() += (w * X.col(i)) * p.transpose();
  }
  return out;
}

Vector per_example_loss(const Matrix& X, const std::vector<int>& labels, const Matrix& W, std::span<const int> rows) {
  const bool all = rows.empty();
  const long count = all ? X.cols() : static_cast<long>(rows.size());
  Vector out(count);
  Vector logits(W.cols()), p(W.cols());
  for (long j = 0; j < count; ++j) {
    const int i = all ? static_cast<int>(j) : rows[j];
    logits.noalias() = W.transpose() * X.col(i);
    out[j] = softmax_into(logits, p) - logits[labels[i]];
  }
  return out;
}

Matrix hessian(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Vector& weights) {
  const long d = W.rows();
  const long C = W.cols();
  Matrix H = Matrix::Zero(d * C, d * C);
  Vector logits(C), p(C);
  Matrix S(C, C);
  for (long i = 0; i < X.cols(); ++i) {
    logits.noalias() = W.transpose() * X.col(i);
    softmax_into(logits, p);
    S = -weights[i] * p * p.transpose();
    S.diagonal() += weights[i] * p;
    const Matrix xx = X.col(i) * X.col(i).transpose();
    for (long a = 0; a < C; ++a)
      for (long b = 0; b <= a; ++b) H.block(a * d, b * d, d, d) += S(a, b) * xx;
  }
  for (long a = 0; a < C; ++a)
    for (long b = 0; b < a; ++b) H.block(b * d, a * d, d, d) = H.block(a * d, b * d, d, d).transpose();
  (void)labels;
  return H;
}

Matrix per_example_grads(const Matrix& X, const std::vector<int>& labels, const Matrix& W) {
  const long d = W.rows();
  const long C = W.cols();
  Matrix out(X.cols(), d * C);
  Vector logits(C), p(C);
  for (long i = 0; i < X.cols(); ++i) {
    logits.noalias() = W.transpose() * X.col(i);
    softmax_into(logits, p);
    p[labels[i]] -= 1.0;
    for (long a = 0; a < C; ++a) out.row(i).segment(a * d, d) = p[a] * X.col(i).transpose();
  }
  return out;
}

}  // namespace serial
}  // namespace f2sa::kernels
