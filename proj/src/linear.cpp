#include "lawarea/linear.hpp"

#include <algorithm>
#include <numeric>

#include "lawarea/error.hpp"
#include "lawarea/random.hpp"
#include "lawarea/topk.hpp"

namespace lawarea {

std::vector<ScoredClass> rank_topk(const Eigen::Ref<const Eigen::VectorXd>& scores, std::size_t k) {
  if (k > static_cast<std::size_t>(scores.size())) throw Error(ErrorCode::KTooLarge, "k exceeds the number of classes");
  std::vector<ScoredClass> ranked;
  ranked.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index c = 0; c < scores.size(); ++c) ranked.push_back({static_cast<ClassId>(c), scores(c)});
  std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredClass& a, const ScoredClass& b) { return a.score > b.score; });
  ranked.resize(k);
  return ranked;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

std::vector<ClassId> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<ClassId> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);  // first maximum
    out[static_cast<std::size_t>(i)] = static_cast<ClassId>(best);
  }
  return out;
}

Eigen::MatrixXd LinearModel::decision_function(const FeatureMatrix& x) const {
  if (x.cols() != weights.cols()) throw Error(ErrorCode::ShapeMismatch, "feature dimension mismatch");
  Eigen::MatrixXd scores = x.visit([&](const auto& m) -> Eigen::MatrixXd { return m * weights.transpose(); });
  scores.rowwise() += bias.transpose();
  return scores;
}

Eigen::MatrixXd LinearModel::predict_proba(const FeatureMatrix& x) const { return softmax_rows(decision_function(x)); }

std::vector<ClassId> LinearModel::predict(const FeatureMatrix& x) const { return argmax_rows(decision_function(x)); }

namespace {

void check_labels(std::span<const ClassId> y, Eigen::Index rows, int num_classes) {
  if (static_cast<Eigen::Index>(y.size()) != rows) throw Error(ErrorCode::LengthMismatch, "labels and rows differ");
  std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
  int distinct = 0;
  for (ClassId c : y) {
    if (c < 0 || c >= num_classes) throw Error(ErrorCode::InvalidArgument, "label out of range");
    if (!seen[static_cast<std::size_t>(c)]) {
      seen[static_cast<std::size_t>(c)] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw Error(ErrorCode::SingleClass, "training data must contain at least two classes");
}

// scores = W x_row
Eigen::VectorXd row_scores(const Eigen::MatrixXd& w, const FeatureMatrix::Sparse& x, Eigen::Index row) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(w.rows());
  for (FeatureMatrix::Sparse::InnerIterator it(x, row); it; ++it) s += it.value() * w.col(it.col());
  return s;
}

Eigen::VectorXd row_scores(const Eigen::MatrixXd& w, const FeatureMatrix::Dense& x, Eigen::Index row) {
  return w * x.row(row).transpose();
}

// W += g x_row^T
void add_outer(Eigen::MatrixXd& w, const Eigen::VectorXd& g, const FeatureMatrix::Sparse& x, Eigen::Index row) {
  for (FeatureMatrix::Sparse::InnerIterator it(x, row); it; ++it) w.col(it.col()) += it.value() * g;
}

void add_outer(Eigen::MatrixXd& w, const Eigen::VectorXd& g, const FeatureMatrix::Dense& x, Eigen::Index row) {
  w.noalias() += g * x.row(row);
}

// W = scale * v, so L2 decay is O(1) per step instead of O(C x D).
struct ScaledWeights {
  Eigen::MatrixXd v;
  double scale = 1.0;

  void decay(double factor) {
    if (factor == 1.0) return;
    if (factor <= 0.0) {
      v.setZero();
      scale = 1.0;
      return;
    }
    scale *= factor;
    if (scale < 1e-9) {
      v *= scale;
      scale = 1.0;
    }
  }

  template <typename X>
  Eigen::VectorXd scores(const X& m, Eigen::Index row) const {
    return scale * row_scores(v, m, row);
  }

  template <typename X>
  void add(const Eigen::VectorXd& g, const X& m, Eigen::Index row) {
    add_outer(v, g / scale, m, row);
  }

  Eigen::MatrixXd materialize() const { return scale * v; }
};

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

LinearModel train_logreg(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes, const LogRegHyper& hyper) {
  check_labels(y, x.rows(), num_classes);
  if (hyper.batch < 1 || hyper.epochs < 0 || hyper.lr < 0 || hyper.l2 < 0) {
    throw Error(ErrorCode::InvalidConfig, "invalid logistic regression hyperparameters");
  }
  LinearModel model{LinearKind::Logistic, Eigen::MatrixXd::Zero(num_classes, x.cols()), Eigen::VectorXd::Zero(num_classes)};
  Rng rng(hyper.seed);
  auto order = iota_indices(y.size());
  // Proximal L2 step, w <- (w - lr g) / (1 + lr l2); stable for any penalty.
  const double decay = 1.0 / (1.0 + hyper.lr * hyper.l2);

  ScaledWeights w{model.weights};
  x.visit([&](const auto& m) {
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      shuffle(std::span(order), rng);
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
        const double scale = hyper.lr / static_cast<double>(end - start);
        Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(num_classes);
        std::vector<std::pair<Eigen::Index, Eigen::VectorXd>> row_grads;
        row_grads.reserve(end - start);
        for (std::size_t b = start; b < end; ++b) {
          const auto row = static_cast<Eigen::Index>(order[b]);
          Eigen::VectorXd s = w.scores(m, row) + model.bias;
          Eigen::VectorXd p = (s.array() - s.maxCoeff()).exp().matrix();
          p /= p.sum();
          p(y[static_cast<std::size_t>(row)]) -= 1.0;  // dCE/ds = p - onehot
          grad_b += p;
          row_grads.emplace_back(row, std::move(p));
        }
        for (const auto& [row, g] : row_grads) w.add((-scale) * g, m, row);
        w.decay(decay);
        model.bias -= scale * grad_b;
      }
    }
  });
  model.weights = w.materialize();
  return model;
}

LinearModel train_linear_svm(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes, const SvmHyper& hyper) {
  check_labels(y, x.rows(), num_classes);
  if (hyper.c < 0 || hyper.epochs < 0 || hyper.lr <= 0) throw Error(ErrorCode::InvalidConfig, "invalid SVM hyperparameters");
  LinearModel model{LinearKind::LinearSvm, Eigen::MatrixXd::Zero(num_classes, x.cols()), Eigen::VectorXd::Zero(num_classes)};
  const double n = static_cast<double>(y.size());
  const double lambda = hyper.c > 0 ? 1.0 / (hyper.c * n) : std::numeric_limits<double>::infinity();
  Rng rng(hyper.seed);
  auto order = iota_indices(y.size());
  double t = 0;

  ScaledWeights w{model.weights};
  x.visit([&](const auto& m) {
    Eigen::VectorXd g(num_classes);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      shuffle(std::span(order), rng);
      for (auto idx : order) {
        const auto row = static_cast<Eigen::Index>(idx);
        const double eta = std::isinf(lambda) ? hyper.lr : hyper.lr / (1.0 + hyper.lr * lambda * t);
        const Eigen::VectorXd s = w.scores(m, row) + model.bias;
        for (int k = 0; k < num_classes; ++k) {
          const double target = (y[idx] == k) ? 1.0 : -1.0;
          g(k) = target * s(k) < 1.0 ? eta * target : 0.0;
        }
        w.decay(std::max(0.0, 1.0 - eta * lambda));
        if (!std::isinf(lambda) && !g.isZero(0)) w.add(g, m, row);
        if (hyper.fit_intercept) model.bias += g;
        t += 1;
      }
    }
  });
  model.weights = w.materialize();
  return model;
}

}  // namespace lawarea
