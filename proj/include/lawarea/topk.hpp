#pragma once

#include <Eigen/Core>
#include <vector>

#include "lawarea/corpus.hpp"

namespace lawarea {

struct ScoredClass {
  ClassId id;
  double score;

  bool operator==(const ScoredClass&) const = default;
};

/// Classes by descending score, ties by class id (= schema code order).
/// Throws Error(KTooLarge) when k exceeds the number of classes.
std::vector<ScoredClass> rank_topk(const Eigen::Ref<const Eigen::VectorXd>& scores, std::size_t k);

/// Row-wise softmax, stabilized by the row maximum.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// argmax per row, lowest index on ties.
std::vector<ClassId> argmax_rows(const Eigen::MatrixXd& scores);

}  // namespace lawarea
