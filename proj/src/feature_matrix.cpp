#include "lawarea/feature_matrix.hpp"

#include "lawarea/error.hpp"

namespace lawarea {

FeatureMatrix FeatureMatrix::from_rows(const std::vector<SparseVector>& rows, Eigen::Index dim) {
  Sparse m(static_cast<Eigen::Index>(rows.size()), dim);
  Eigen::VectorXi nnz(m.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) nnz(static_cast<Eigen::Index>(i)) = static_cast<int>(rows[i].nonZeros());
  m.reserve(nnz);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw Error(ErrorCode::ShapeMismatch, "sparse row dimension mismatch");
    for (SparseVector::InnerIterator it(rows[i]); it; ++it) {
      m.insert(static_cast<Eigen::Index>(i), it.index()) = it.value();
    }
  }
  m.makeCompressed();
  return FeatureMatrix(std::move(m));
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<Eigen::VectorXd>& rows, Eigen::Index dim) {
  Dense m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw Error(ErrorCode::ShapeMismatch, "dense row dimension mismatch");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return FeatureMatrix(std::move(m));
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  if (is_sparse()) {
    const auto& src = sparse();
    Sparse out(static_cast<Eigen::Index>(rows.size()), src.cols());
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (Sparse::InnerIterator it(src, static_cast<Eigen::Index>(rows[i])); it; ++it) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
      }
    }
    out.setFromTriplets(triplets.begin(), triplets.end());
    return FeatureMatrix(std::move(out));
  }
  const auto& src = dense();
  Dense out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(rows[i]));
  return FeatureMatrix(std::move(out));
}

}  // namespace lawarea
