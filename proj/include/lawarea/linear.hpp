#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>

#include "lawarea/corpus.hpp"
#include "lawarea/feature_matrix.hpp"

namespace lawarea {

enum class LinearKind { Logistic, LinearSvm };

/// C x D weights plus a bias per class.
struct LinearModel {
  LinearKind kind = LinearKind::Logistic;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  int num_classes() const noexcept { return static_cast<int>(weights.rows()); }
  /// n x C raw scores.
  Eigen::MatrixXd decision_function(const FeatureMatrix& x) const;
  /// Softmax of the decision scores (the logistic model's own probabilities;
  /// for the SVM a ranking confidence over one-vs-rest margins).
  Eigen::MatrixXd predict_proba(const FeatureMatrix& x) const;
  std::vector<ClassId> predict(const FeatureMatrix& x) const;
};

struct LogRegHyper {
  double l2 = 1e-4;
  double lr = 0.5;
  int epochs = 30;
  int batch = 32;
  std::uint64_t seed = 1;
};

/// Multinomial softmax regression by mini-batch SGD with a proximal L2 step
/// (bias not penalized). Throws Error(SingleClass) unless >= 2 classes occur.
LinearModel train_logreg(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes, const LogRegHyper& hyper);

struct SvmHyper {
  double c = 1.0;  // lambda = 1 / (c * n)
  double lr = 0.1;
  int epochs = 30;
  bool fit_intercept = true;
  std::uint64_t seed = 1;
};

/// One-vs-rest hinge loss with L2, per-sample subgradient SGD with step
/// lr / (1 + lr * lambda * t).
LinearModel train_linear_svm(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes, const SvmHyper& hyper);

}  // namespace lawarea
