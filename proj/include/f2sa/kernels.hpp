#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "f2sa/types.hpp"

namespace f2sa::kernels {

/// Softmax cross-entropy kernels for a linear classifier. Examples are the
/// columns of `X` (d x n); the model W is d x C and vec(W) stacks its columns.
///
/// Two implementations share this interface. The serial one is the reference;
/// the OpenMP one accumulates per-thread partial sums and combines them in
/// thread order, so its results are reproducible for a fixed thread count and
/// agree with the serial ones up to rounding.
enum class Backend { Serial, OpenMP };

std::string_view to_string(Backend b);
Backend backend_from_string(std::string_view s);

struct Batch {
  std::span<const int> rows;        // empty selects every example
  std::span<const double> weights;  // per selected example; empty means 1
};

struct LossGrad {
  double loss = 0.0;  // sum of weight * loss over the batch
  Matrix grad;        // d x C, sum of weight * gradient
};

/// Weighted loss sum and gradient with respect to W.
LossGrad loss_and_grad(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W,
                       const Batch& batch = {});

/// Unweighted per-example losses for the selected rows (all rows when empty).
Vector per_example_loss(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W,
                        std::span<const int> rows = {});

/// Hessian of sum_i weights[i] * loss_i with respect to vec(W); weights has one
/// entry per example.
Matrix hessian(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W,
               const Vector& weights);

/// n x (d C) matrix whose row i is vec of the gradient of loss_i.
Matrix per_example_grads(Backend backend, const Matrix& X, const std::vector<int>& labels, const Matrix& W);

namespace serial {
LossGrad loss_and_grad(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Batch& batch);
Vector per_example_loss(const Matrix& X, const std::vector<int>& labels, const Matrix& W, std::span<const int> rows);
Matrix hessian(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Vector& weights);
Matrix per_example_grads(const Matrix& X, const std::vector<int>& labels, const Matrix& W);
}  // namespace serial

namespace omp {
LossGrad loss_and_grad(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Batch& batch);
Vector per_example_loss(const Matrix& X, const std::vector<int>& labels, const Matrix& W, std::span<const int> rows);
Matrix hessian(const Matrix& X, const std::vector<int>& labels, const Matrix& W, const Vector& weights);
Matrix per_example_grads(const Matrix& X, const std::vector<int>& labels, const Matrix& W);
}  // namespace omp

/// Stable log-sum-exp softmax of `logits` into `p`; returns log-sum-exp.
double softmax_into(const Vector& logits, Vector& p);

}  // namespace f2sa::kernels
