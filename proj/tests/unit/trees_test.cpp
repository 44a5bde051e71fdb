#include <gtest/gtest.h>

#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"
#include "lawarea/random.hpp"
#include "lawarea/trees.hpp"

using namespace lawarea;

namespace {

struct Fixture {
  FeatureMatrix x;
  std::vector<ClassId> y;
};

// Three noisy classes on a few informative columns plus noise columns; the
// last column is always set, so rows are distinct.
Fixture noisy(std::size_t n, std::uint64_t seed, bool sparse) {
  Rng rng(seed);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 6);
  std::vector<ClassId> y;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const int c = static_cast<int>(uniform_index(rng, 3));
    y.push_back(c);
    if (uniform01(rng) < 0.8) x(r, c) = 0.5 + uniform01(rng);
    for (Eigen::Index j = 3; j < 6; ++j) {
      if (j == 5 || uniform01(rng) < 0.4) x(r, j) = uniform01(rng);
    }
  }
  if (sparse) return {FeatureMatrix(FeatureMatrix::Sparse(x.sparseView())), y};
  return {FeatureMatrix(x), y};
}

Fixture duplicated(const Fixture& f) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < f.y.size(); ++i) idx.insert(idx.end(), {i, i});
  std::vector<ClassId> y;
  for (auto i : idx) y.push_back(f.y[i]);
  return {f.x.select_rows(idx), y};
}

ClassId majority(const std::vector<ClassId>& y, int c) {
  std::vector<int> counts(static_cast<std::size_t>(c), 0);
  for (ClassId v : y) ++counts[static_cast<std::size_t>(v)];
  return static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

TEST(Forest, SingleDeepTreeMemorizesDistinctRows) {
  for (bool sparse : {false, true}) {
    const Fixture f = noisy(80, 1, sparse);
    ForestHyper h;
    h.n_trees = 1;
    h.bootstrap = false;
    h.max_features_frac = 1.0;
    const ForestModel m = train_random_forest(f.x, f.y, 3, h);
    EXPECT_EQ(accuracy(m.predict(f.x), f.y), 1.0) << "sparse=" << sparse;
  }
}

TEST(Forest, DepthZeroPredictsMajority) {
  const Fixture f = noisy(60, 2, false);
  ForestHyper h;
  h.n_trees = 5;
  h.max_depth = 0;
  h.bootstrap = false;
  const ForestModel m = train_random_forest(f.x, f.y, 3, h);
  for (ClassId p : m.predict(f.x)) EXPECT_EQ(p, majority(f.y, 3));
}

TEST(Forest, VotesSumToTreeCount) {
  const Fixture f = noisy(60, 3, true);
  for (int trees : {100, 101}) {
    ForestHyper h;
    h.n_trees = trees;
    const ForestModel m = train_random_forest(f.x, f.y, 3, h);
    const Eigen::MatrixXd v = m.votes(f.x);
    for (Eigen::Index i = 0; i < v.rows(); ++i) EXPECT_EQ(v.row(i).sum(), trees);
    const Eigen::MatrixXd p = m.predict_proba(f.x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(Forest, TrainingAccuracyGrowsWithDepth) {
  const Fixture f = noisy(90, 4, false);
  double previous = 0;
  for (int depth : {0, 1, 2, 4, 8, -1}) {
    ForestHyper h;
    h.n_trees = 1;
    h.bootstrap = false;
    h.max_features_frac = 1.0;
    h.max_depth = depth;
    const double acc = accuracy(train_random_forest(f.x, f.y, 3, h).predict(f.x), f.y);
    EXPECT_GE(acc, previous) << "depth " << depth;
    previous = acc;
  }
}

TEST(Forest, ThreadsDoNotChangeTheModel) {
  const Fixture f = noisy(50, 5, true);
  ForestHyper h;
  h.n_trees = 12;
  h.seed = 3;
  const ForestModel a = train_random_forest(f.x, f.y, 3, h);
  h.threads = 4;
  const ForestModel b = train_random_forest(f.x, f.y, 3, h);
  EXPECT_EQ(a.votes(f.x), b.votes(f.x));
}

TEST(Forest, DuplicatedRowsKeepPredictions) {
  const Fixture f = noisy(40, 6, false);
  const Fixture d = duplicated(f);
  ForestHyper h;
  h.n_trees = 1;
  h.bootstrap = false;
  h.max_features_frac = 1.0;
  EXPECT_EQ(train_random_forest(f.x, f.y, 3, h).predict(f.x), train_random_forest(d.x, d.y, 3, h).predict(f.x));
}

TEST(Forest, SingleClassRejected) {
  const Fixture f = noisy(10, 7, false);
  const std::vector<ClassId> y(f.y.size(), 2);
  try {
    train_random_forest(f.x, y, 3, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }
}

TEST(Gbm, ZeroRoundsIsLogPrior) {
  const Fixture f = noisy(60, 8, false);
  GbmHyper h;
  h.n_rounds = 0;
  const GbmModel m = train_gradient_boosting(f.x, f.y, 3, h);
  std::vector<double> counts(3, 0);
  for (ClassId c : f.y) counts[static_cast<std::size_t>(c)] += 1;
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(m.init_logits(c), std::log(counts[static_cast<std::size_t>(c)] / 60.0), 1e-12);
  for (ClassId p : m.predict(f.x)) EXPECT_EQ(p, majority(f.y, 3));
}

TEST(Gbm, TrainingLogLossNeverIncreases) {
  for (bool sparse : {false, true}) {
    const Fixture f = noisy(100, 9, sparse);
    for (double lr : {0.1, 0.3}) {
      GbmHyper h;
      h.n_rounds = 25;
      h.lr = lr;
      h.max_depth = 3;
      GbmTrace trace;
      const GbmModel m = train_gradient_boosting(f.x, f.y, 3, h, &trace);
      ASSERT_EQ(trace.train_log_loss.size(), 26u);
      for (std::size_t t = 1; t < trace.train_log_loss.size(); ++t) {
        EXPECT_LE(trace.train_log_loss[t], trace.train_log_loss[t - 1] + 1e-12) << "round " << t;
      }
      EXPECT_NEAR(trace.train_log_loss.back(), log_loss(m.predict_proba(f.x), f.y), 1e-9);
    }
  }
}

TEST(Gbm, ThresholdSeparableDataFitsInTenRounds) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<ClassId> y;
  for (int i = 0; i < 30; ++i) {
    rows.push_back(Eigen::VectorXd::Constant(1, i));
    y.push_back(i < 10 ? 0 : (i < 20 ? 1 : 2));
  }
  const FeatureMatrix x = FeatureMatrix::from_rows(rows, 1);
  GbmHyper h;
  h.n_rounds = 10;
  EXPECT_EQ(accuracy(train_gradient_boosting(x, y, 3, h).predict(x), y), 1.0);
}

TEST(Gbm, DuplicatedRowsKeepPredictions) {
  const Fixture f = noisy(50, 10, false);
  const Fixture d = duplicated(f);
  GbmHyper h;
  h.n_rounds = 10;
  EXPECT_EQ(train_gradient_boosting(f.x, f.y, 3, h).predict(f.x), train_gradient_boosting(d.x, d.y, 3, h).predict(f.x));
}

TEST(Trees, SplitFeaturesInRange) {
  const Fixture f = noisy(70, 11, true);
  ForestHyper h;
  h.n_trees = 5;
  for (const auto& tree : train_random_forest(f.x, f.y, 3, h).trees) {
    for (const auto& node : tree.nodes) EXPECT_LT(node.feature, f.x.cols());
  }
}
