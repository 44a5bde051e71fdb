#include <gtest/gtest.h>

#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"
#include "lawarea/linear.hpp"
#include "lawarea/random.hpp"
#include "lawarea/topk.hpp"

using namespace lawarea;

namespace {

struct Fixture {
  FeatureMatrix x;
  std::vector<ClassId> y;
};

Fixture separable_1d() {
  std::vector<Eigen::VectorXd> rows;
  std::vector<ClassId> y;
  for (int i = 1; i <= 10; ++i) {
    rows.push_back(Eigen::VectorXd::Constant(1, -0.5 - 0.25 * i));
    y.push_back(0);
    rows.push_back(Eigen::VectorXd::Constant(1, 0.5 + 0.25 * i));
    y.push_back(1);
  }
  return {FeatureMatrix::from_rows(rows, 1), y};
}

Fixture blobs(int classes, int per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> rows;
  std::vector<ClassId> y;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(classes);
      v(c) = 2.0;
      for (int j = 0; j < classes; ++j) v(j) += 0.3 * (uniform01(rng) - 0.5);
      rows.push_back(v);
      y.push_back(c);
    }
  }
  return {FeatureMatrix::from_rows(rows, classes), y};
}

Fixture duplicated(const Fixture& f) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < f.y.size(); ++i) idx.insert(idx.end(), {i, i});
  std::vector<ClassId> y;
  for (auto i : idx) y.push_back(f.y[i]);
  return {f.x.select_rows(idx), y};
}

}  // namespace

TEST(LogReg, SeparableDataReachesFullTrainingAccuracy) {
  const Fixture f = separable_1d();
  const LinearModel m = train_logreg(f.x, f.y, 2, {});
  EXPECT_EQ(accuracy(m.predict(f.x), f.y), 1.0);
  const Eigen::MatrixXd p = m.predict_proba(f.x);
  for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
}

TEST(LogReg, HugePenaltyCollapsesToPriors) {
  Fixture f = separable_1d();
  f.y[0] = 1;  // class 1 is now the majority
  LogRegHyper h;
  h.l2 = 1e9;
  const LinearModel m = train_logreg(f.x, f.y, 2, h);
  EXPECT_LT(m.weights.cwiseAbs().maxCoeff(), 1e-6);
  for (ClassId p : m.predict(f.x)) EXPECT_EQ(p, 1);
}

TEST(LogReg, SingleClassRejected) {
  const Fixture f = separable_1d();
  const std::vector<ClassId> y(f.y.size(), 1);
  try {
    train_logreg(f.x, y, 2, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }
}

TEST(LogReg, DeterministicGivenSeed) {
  const Fixture f = blobs(4, 15, 2);
  LogRegHyper h;
  h.seed = 5;
  EXPECT_EQ(train_logreg(f.x, f.y, 4, h).weights, train_logreg(f.x, f.y, 4, h).weights);
}

TEST(LinearSvm, SeparableDataReachesFullTrainingAccuracy) {
  const Fixture f = separable_1d();
  const LinearModel m = train_linear_svm(f.x, f.y, 2, {});
  EXPECT_EQ(m.kind, LinearKind::LinearSvm);
  EXPECT_EQ(accuracy(m.predict(f.x), f.y), 1.0);
}

TEST(LinearSvm, TinyCShrinksWeights) {
  const Fixture f = blobs(3, 10, 4);
  SvmHyper h;
  h.c = 1e-6;
  EXPECT_LT(train_linear_svm(f.x, f.y, 3, h).weights.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(LinearSvm, MirrorSymmetryWithoutBias) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<ClassId> y;
  Rng rng(21);
  for (int i = 0; i < 5; ++i) {
    Eigen::Vector2d v(0.5 + uniform01(rng), uniform01(rng) - 0.5);
    rows.push_back(v);
    y.push_back(0);
    rows.push_back(-v);
    y.push_back(1);
  }
  const FeatureMatrix x = FeatureMatrix::from_rows(rows, 2);
  SvmHyper h;
  h.fit_intercept = false;
  const LinearModel m = train_linear_svm(x, y, 2, h);
  const Eigen::MatrixXd s = m.decision_function(x);
  for (Eigen::Index i = 0; i < s.rows(); i += 2) {
    EXPECT_NEAR(s(i, 0), s(i + 1, 1), 1e-6);
    EXPECT_NEAR(s(i, 1), s(i + 1, 0), 1e-6);
  }
}

TEST(Linear, SparseAndDenseInputsAgree) {
  const Fixture f = blobs(3, 12, 8);
  const Eigen::MatrixXd dense = f.x.dense();
  const FeatureMatrix sparse(FeatureMatrix::Sparse(dense.sparseView()));
  const LinearModel a = train_logreg(f.x, f.y, 3, {});
  const LinearModel b = train_logreg(sparse, f.y, 3, {});
  EXPECT_LT((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((a.decision_function(f.x) - a.decision_function(sparse)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Linear, DuplicatedRowsKeepPredictions) {
  const Fixture f = blobs(4, 12, 13);
  const Fixture d = duplicated(f);
  EXPECT_EQ(train_logreg(f.x, f.y, 4, {}).predict(f.x), train_logreg(d.x, d.y, 4, {}).predict(f.x));
  EXPECT_EQ(train_linear_svm(f.x, f.y, 4, {}).predict(f.x), train_linear_svm(d.x, d.y, 4, {}).predict(f.x));
}

TEST(TopK, OrderingAndTies) {
  const auto top = rank_topk(Eigen::Vector3d(0.1, 0.7, 0.2), 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].id, 1);
  EXPECT_EQ(top[1].id, 2);
  const auto uniform = rank_topk(Eigen::VectorXd::Constant(5, 0.2), 5);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(uniform[static_cast<std::size_t>(i)].id, i);
  try {
    rank_topk(Eigen::Vector3d(1, 2, 3), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
}

TEST(TopK, FirstEntryIsPlainPrediction) {
  const Fixture f = blobs(5, 8, 17);
  const LinearModel m = train_logreg(f.x, f.y, 5, {});
  const Eigen::MatrixXd p = m.predict_proba(f.x);
  const auto pred = m.predict(f.x);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    EXPECT_EQ(rank_topk(p.row(i).transpose(), 1)[0].id, pred[static_cast<std::size_t>(i)]);
  }
  const Eigen::MatrixXd s = softmax_rows(Eigen::MatrixXd::Constant(2, 3, 1000.0));
  EXPECT_NEAR(s(0, 0), 1.0 / 3, 1e-15);
}
