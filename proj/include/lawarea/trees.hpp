#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "lawarea/corpus.hpp"
#include "lawarea/feature_matrix.hpp"

namespace lawarea {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  int leaf = -1;  // column of DecisionTree::leaf_values
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  Eigen::MatrixXd leaf_values;  // outputs x leaves

  int leaf_of(const FeatureMatrix& x, Eigen::Index row) const;
  auto value(const FeatureMatrix& x, Eigen::Index row) const { return leaf_values.col(leaf_of(x, row)); }
  int depth() const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;  // leaves hold class distributions
  int num_classes = 0;

  /// n x C vote counts; every row sums to the number of trees.
  Eigen::MatrixXd votes(const FeatureMatrix& x) const;
  /// Vote fractions.
  Eigen::MatrixXd predict_proba(const FeatureMatrix& x) const;
  std::vector<ClassId> predict(const FeatureMatrix& x) const;
};

struct ForestHyper {
  int n_trees = 100;
  int max_depth = -1;  // -1 = grow until pure
  double max_features_frac = 0.0;  // 0 = sqrt(D)
  bool bootstrap = true;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Bagged Gini trees with per-node feature subsampling.
ForestModel train_random_forest(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes,
                                const ForestHyper& hyper);

struct GbmModel {
  Eigen::VectorXd init_logits;  // log class priors
  double learning_rate = 0.1;
  std::vector<std::vector<DecisionTree>> rounds;  // rounds[t][class]; single-output leaves

  int num_classes() const noexcept { return static_cast<int>(init_logits.size()); }
  Eigen::MatrixXd decision_function(const FeatureMatrix& x) const;
  Eigen::MatrixXd predict_proba(const FeatureMatrix& x) const;
  std::vector<ClassId> predict(const FeatureMatrix& x) const;
};

struct GbmHyper {
  int n_rounds = 50;
  int max_depth = 3;
  double lr = 0.1;
  double max_features_frac = 1.0;
  std::uint64_t seed = 1;
};

struct GbmTrace {
  std::vector<double> train_log_loss;  // entry 0 is the prior-only model
};

/// Per round and class, a regression tree is fit to the softmax residual
/// (one-hot - probability); leaves hold the mean residual and logits move by
/// lr x leaf value.
GbmModel train_gradient_boosting(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes,
                                 const GbmHyper& hyper, GbmTrace* trace = nullptr);

/// Mean negative log-likelihood of the labels under row-stochastic `proba`.
double log_loss(const Eigen::MatrixXd& proba, std::span<const ClassId> y);

}  // namespace lawarea
