#pragma once

#include <Eigen/Core>
#include <cmath>

namespace lawarea::sgns {

template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  // log(1 / (1 + e^-x)) without overflow for large |x|
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// Negative-sampling loss for one center/context pair:
///   -log s(ctx . center) - sum_k log s(-neg_k . center)
/// `negatives` holds one output vector per column.
template <typename DerivedC, typename DerivedP, typename DerivedN>
typename DerivedC::Scalar loss(const Eigen::MatrixBase<DerivedC>& center, const Eigen::MatrixBase<DerivedP>& context,
                               const Eigen::MatrixBase<DerivedN>& negatives) {
  using Scalar = typename DerivedC::Scalar;
  Scalar l = -log_sigmoid<Scalar>(context.dot(center));
  for (Eigen::Index k = 0; k < negatives.cols(); ++k) l -= log_sigmoid<Scalar>(-negatives.col(k).dot(center));
  return l;
}

/// Analytic gradient of loss(); returns the loss. Output arguments are overwritten.
template <typename DerivedC, typename DerivedP, typename DerivedN, typename GC, typename GP, typename GN>
typename DerivedC::Scalar gradient(const Eigen::MatrixBase<DerivedC>& center, const Eigen::MatrixBase<DerivedP>& context,
                                   const Eigen::MatrixBase<DerivedN>& negatives, Eigen::MatrixBase<GC>& grad_center,
                                   Eigen::MatrixBase<GP>& grad_context, Eigen::MatrixBase<GN>& grad_negatives) {
  using Scalar = typename DerivedC::Scalar;
  const Scalar pos = context.dot(center);
  Scalar l = -log_sigmoid<Scalar>(pos);
  // d/dx -log s(x) = s(x) - 1
  const Scalar g_pos = sigmoid<Scalar>(pos) - Scalar(1);
  grad_center = g_pos * context;
  grad_context = g_pos * center;
  for (Eigen::Index k = 0; k < negatives.cols(); ++k) {
    const Scalar s = negatives.col(k).dot(center);
    l -= log_sigmoid<Scalar>(-s);
    // d/dx -log s(-x) = s(x)
    const Scalar g_neg = sigmoid<Scalar>(s);
    grad_center += g_neg * negatives.col(k);
    grad_negatives.col(k) = g_neg * center;
  }
  return l;
}

}  // namespace lawarea::sgns
