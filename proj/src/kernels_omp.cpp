#include <omp.h>

#include "f2sa/kernels.hpp"

namespace f2sa::kernels::omp {

namespace {

// Contiguous block of [0, count) owned by thread `t` of `nt`.
std::pair<long, long> block_range(long count, int t, int nt) {
  const long base = count / nt;
  const long extra = count % nt;
  const long begin = t * base + std::min<long>(t, extra);
  return {begin, begin + base + (t < extra ? 1 : 0)};
}

}  // namespace

LossGrad loss_and_grad(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Batch& batch) {
  const bool all = batch.rows.empty();
  const long count = all ? X.cols() : static_cast<long>(batch.rows.size());
  const int nt = std::max(1, std::min<int>(omp_get_max_threads(), static_cast<int>(count)));
  std::vector<double> losses(nt, 0.0);
  std::vector<Matrix> grads(nt, Matrix::Zero(W.rows(), W.cols()));
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const auto [begin, end] = block_range(count, t, omp_get_num_threads());
    Vector logits(W.cols()), p(W.cols());
    Matrix& G = grads[t];
    for (long j = begin; j < end; ++j) {
      const int i = all ? static_cast<int>(j) : batch.rows[j];
      const double w = batch.weights.empty() ? 1.0 : batch.weights[j];
      logits.noalias() = W.transpose() * X.col(i);
      const double lse = softmax_into(logits, p);
      losses[t] += w * (lse - logits[labels[i]]);
      p[labels[i]] -= 1.0;
      G.noalias() += (w * X.col(i)) * p.transpose();
    }
  }
  LossGrad out;
  out.grad = Matrix::Zero(W.rows(), W.cols());
  for (int t = 0; t < nt; ++t) {
    out.loss += losses[t];
    out.grad += grads[t];
  }
  return out;
}

Vector per_example_loss(const Matrix& X, const std::vector<int>& labels, const Matrix& W, std::span<const int> rows) {
  const bool all = rows.empty();
  const long count = all ? X.cols() : static_cast<long>(rows.size());
  Vector out(count);
#pragma omp parallel
  {
    Vector logits(W.cols()), p(W.cols());
#pragma omp for schedule(static)
    for (long j = 0; j < count; ++j) {
      const int i = all ? static_cast<int>(j) : rows[j];
      logits.noalias() = W.transpose() * X.col(i);
      out[j] = softmax_into(logits, p) - logits[labels[i]];
    }
  }
  return out;
}

Matrix hessian(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Vector& weights) {
  (void)labels;
  const long d = W.rows();
  const long C = W.cols();
  const long n = X.cols();
  const int nt = std::max(1, std::min<int>(omp_get_max_threads(), static_cast<int>(n)));
  std::vector<Matrix> parts(nt, Matrix::Zero(d * C, d * C));
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const auto [begin, end] = block_range(n, t, omp_get_num_threads());
    Vector logits(C), p(C);
    Matrix S(C, C);
    Matrix& H = parts[t];
    for (long i = begin; i < end; ++i) {
      logits.noalias() = W.transpose() * X.col(i);
      softmax_into(logits, p);
      S = -weights[i] * p * p.transpose();
      S.diagonal() += weights[i] * p;
      const Matrix xx = X.col(i) * X.col(i).transpose();
      for (long a = 0; a < C; ++a)
        for (long b = 0; b <= a; ++b) H.block(a * d, b * d, d, d) += S(a, b) * xx;
    }
  }
  Matrix H = Matrix::Zero(d * C, d * C);
  for (const Matrix& part : parts) H += part;
  for (long a = 0; a < C; ++a)
    for (long b = 0; b < a; ++b) H.block(b * d, a * d, d, d) = H.block(a * d, b * d, d, d).transpose();
  return H;
}

Matrix per_example_grads(const Matrix& X, const std::vector<int>& labels, const Matrix& W) {
  const long d = W.rows();
  const long C = W.cols();
  Matrix out(X.cols(), d * C);
#pragma omp parallel
  {
    Vector logits(C), p(C);
#pragma omp for schedule(static)
    for (long i = 0; i < X.cols(); ++i) {
      logits.noalias() = W.transpose() * X.col(i);
      softmax_into(logits, p);
      p[labels[i]] -= 1.0;
      for (long a = 0; a < C; ++a) out.row(i).segment(a * d, d) = p[a] * X.col(i).transpose();
    }
  }
  return out;
}

}  // namespace f2sa::kernels::omp
