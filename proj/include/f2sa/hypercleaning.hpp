#pragma once

#include <cstdint>
#include <vector>

#include "f2sa/dataset.hpp"
#include "f2sa/kernels.hpp"
#include "f2sa/oracle.hpp"

namespace f2sa {

/// Data hypercleaning as a bilevel problem. The outer variable holds one
/// weight logit per training example, the inner variable is vec(W) of a linear
/// softmax classifier (d x C):
///
///   g(x, W) = sum_i sigmoid(x_i) loss_i(W) + c ||W||^2   over the training set
///   f(x, W) = sum_j loss_j(W)                            over the validation set
///
/// Features are centered on the training mean, which plays the role of an
/// intercept. Sampled oracles draw a mini-batch without replacement (train
/// for g, validation for f) and rescale it to be unbiased for the full sums;
/// the regularization gradient 2cW is always exact.
class HypercleaningProblem final : public BilevelProblem, public SecondOrderOracle {
 public:
  struct Options {
    double c = 0.01;
    NoiseRegime regime = NoiseRegime::BothNoisy;
    kernels::Backend backend = kernels::Backend::Serial;
  };

  HypercleaningProblem(const Dataset& train, const Dataset& validation, Options options);

  int dim_x() const override { return static_cast<int>(n_); }
  int dim_y() const override { return static_cast<int>(d_ * classes_); }
  NoiseRegime noise_regime() const override { return options_.regime; }
  const RegularityConstants& constants() const override { return constants_; }
  const Options& options() const { return options_; }
  long train_size() const { return n_; }
  long validation_size() const { return m_; }
  int num_classes() const { return classes_; }

  void gradient(Channel which, const Vector& x, const Vector& y, const SampleToken* token,
                Vector& out) const override;
  std::optional<double> upper_value(const Vector& x, const Vector& y) const override;
  std::optional<double> lower_value(const Vector& x, const Vector& y) const override;
  /// Mean loss on the training labels as given (possibly corrupted) and on the
  /// validation set.
  std::optional<DatasetLosses> dataset_losses(const Vector& x, const Vector& y) const override;

  const SecondOrderOracle* second_order() const override { return this; }
  Matrix hess_g_yy(const Vector& x, const Vector& y) const override;
  Matrix jac_g_xy(const Vector& x, const Vector& y) const override;

  /// Mini-batch indices of a token for a population of `size` examples:
  /// sorted, distinct, drawn uniformly without replacement.
  static std::vector<int> batch_indices(const SampleToken& token, long size, std::uint64_t salt);

  /// Minimizer of sum_i loss_i(W) + c ||W||^2 with every example at weight 1.
  Vector unit_weight_solution() const;
  /// Mean validation loss at a given inner variable.
  double validation_loss(const Vector& y) const;

 private:
  Matrix as_matrix(const Vector& y) const;
  Vector flatten(const Matrix& W) const;
  void compute_constants();

  Options options_;
  long n_ = 0, m_ = 0;
  int d_ = 0, classes_ = 0;
  Matrix X_train_, X_val_;  // d x n, d x m (centered, one example per column)
  std::vector<int> y_train_, y_val_;
  RegularityConstants constants_;
};

struct HypercleaningSetup {
  long n = 2000;
  long m = 200;
  int d = 10;
  int classes = 4;
  double spread = 0.025;
  double center_width = 0.1;
  double corruption = 0.3;
  std::uint64_t data_seed = 1234;
};

struct HypercleaningInstance {
  Dataset train;  // corrupted labels
  Dataset validation;
  std::vector<bool> corrupted;
};

/// Synthetic blob data with corrupted training labels.
HypercleaningInstance make_hypercleaning_instance(const HypercleaningSetup& setup);

}  // namespace f2sa
