#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <span>
#include <variant>
#include <vector>

#include "lawarea/features.hpp"

namespace lawarea {

/// Document-by-feature matrix: sparse TF-IDF rows or dense sentence-mean rows.
class FeatureMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  using Dense = Eigen::MatrixXd;

  FeatureMatrix() : data_(Dense()) {}
  explicit FeatureMatrix(Sparse m) : data_(std::move(m)) {}
  explicit FeatureMatrix(Dense m) : data_(std::move(m)) {}

  static FeatureMatrix from_rows(const std::vector<SparseVector>& rows, Eigen::Index dim);
  static FeatureMatrix from_rows(const std::vector<Eigen::VectorXd>& rows, Eigen::Index dim);

  bool is_sparse() const noexcept { return std::holds_alternative<Sparse>(data_); }
  const Sparse& sparse() const { return std::get<Sparse>(data_); }
  const Dense& dense() const { return std::get<Dense>(data_); }

  Eigen::Index rows() const noexcept {
    return std::visit([](const auto& m) { return m.rows(); }, data_);
  }
  Eigen::Index cols() const noexcept {
    return std::visit([](const auto& m) { return m.cols(); }, data_);
  }

  double value(Eigen::Index row, Eigen::Index col) const {
    return std::visit([&](const auto& m) { return m.coeff(row, col); }, data_);
  }

  template <typename F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), data_);
  }

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::variant<Sparse, Dense> data_;
};

}  // namespace lawarea
