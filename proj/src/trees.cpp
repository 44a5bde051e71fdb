#include "lawarea/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "lawarea/error.hpp"
#include "lawarea/random.hpp"
#include "lawarea/topk.hpp"

namespace lawarea {

int DecisionTree::leaf_of(const FeatureMatrix& x, Eigen::Index row) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x.value(row, node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].leaf;
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& node = nodes[i];
    if (node.feature < 0) continue;
    depth[static_cast<std::size_t>(node.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(node.right)] = depth[i] + 1;
    deepest = std::max(deepest, depth[i] + 1);
  }
  return deepest;
}

namespace {

struct Sample {
  Eigen::Index row;
  double weight;
};

// Weighted class histogram; score() = sum_k c_k^2 / w, so maximizing the
// summed child score minimizes weighted Gini impurity.
struct GiniStats {
  std::vector<double> counts;
  double w = 0;
  double sq = 0;

  explicit GiniStats(int n_classes) : counts(static_cast<std::size_t>(n_classes), 0.0) {}

  void add(ClassId k, double wt) {
    double& c = counts[static_cast<std::size_t>(k)];
    sq += (c + wt) * (c + wt) - c * c;
    c += wt;
    w += wt;
  }
  void add(const GiniStats& other, double sign) {
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (other.counts[k] != 0) add(static_cast<ClassId>(k), sign * other.counts[k]);
    }
  }
  double score() const { return w > 1e-12 ? sq / w : 0.0; }
  bool pure() const { return std::any_of(counts.begin(), counts.end(), [&](double c) { return c >= w - 1e-12; }); }
};

struct GiniCriterion {
  using Stats = GiniStats;
  std::span<const ClassId> y;
  int n_classes;
  static constexpr bool kAllowZeroGain = true;

  Stats empty() const { return Stats(n_classes); }
  void add(Stats& s, Eigen::Index row, double wt) const { s.add(y[static_cast<std::size_t>(row)], wt); }
  int outputs() const { return n_classes; }
  void leaf(const Stats& s, Eigen::Ref<Eigen::VectorXd> out) const {
    for (int k = 0; k < n_classes; ++k) out(k) = s.counts[static_cast<std::size_t>(k)] / s.w;
  }
};

// Squared-error reduction: score() = sum^2 / w.
struct MseStats {
  double sum = 0;
  double sum_sq = 0;
  double w = 0;

  void add(double target, double wt) {
    sum += wt * target;
    sum_sq += wt * target * target;
    w += wt;
  }
  void add(const MseStats& other, double sign) {
    sum += sign * other.sum;
    sum_sq += sign * other.sum_sq;
    w += sign * other.w;
  }
  double score() const { return w > 1e-12 ? sum * sum / w : 0.0; }
  bool pure() const { return w <= 1e-12 || sum_sq - sum * sum / w <= 1e-14 * std::max(1.0, sum_sq); }
};

struct MseCriterion {
  using Stats = MseStats;
  std::span<const double> target;
  static constexpr bool kAllowZeroGain = false;

  Stats empty() const { return {}; }
  void add(Stats& s, Eigen::Index row, double wt) const { s.add(target[static_cast<std::size_t>(row)], wt); }
  int outputs() const { return 1; }
  void leaf(const Stats& s, Eigen::Ref<Eigen::VectorXd> out) const { out(0) = s.sum / s.w; }
};

// Column-wise access for split search; sparse inputs are converted to CSC once.
class Columns {
 public:
  explicit Columns(const FeatureMatrix& x) : x_(x) {
    if (x.is_sparse()) csc_ = x.sparse();
  }

  bool sparse() const { return x_.is_sparse(); }
  Eigen::Index cols() const { return x_.cols(); }

  // Appends (value, position-in-node) for the node's nonzero entries (sparse)
  // or for all node samples (dense).
  void gather(Eigen::Index feature, const std::vector<Sample>& samples, const std::vector<int>& position,
              std::vector<std::pair<double, int>>& out) const {
    out.clear();
    if (sparse()) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(csc_, feature); it; ++it) {
        const int p = position[static_cast<std::size_t>(it.row())];
        if (p >= 0 && it.value() != 0.0) out.emplace_back(it.value(), p);
      }
    } else {
      const auto& d = x_.dense();
      for (std::size_t i = 0; i < samples.size(); ++i) out.emplace_back(d(samples[i].row, feature), static_cast<int>(i));
    }
  }

 private:
  const FeatureMatrix& x_;
  Eigen::SparseMatrix<double> csc_;
};

template <typename Criterion>
class TreeBuilder {
 public:
  using Stats = typename Criterion::Stats;

  TreeBuilder(const FeatureMatrix& x, const Columns& columns, const Criterion& criterion, int max_depth,
              Eigen::Index max_features, std::uint64_t seed)
      : x_(x),
        columns_(columns),
        criterion_(criterion),
        max_depth_(max_depth),
        max_features_(max_features),
        rng_(seed),
        position_(static_cast<std::size_t>(x.rows()), -1) {}

  DecisionTree build(std::vector<Sample> samples) {
    leaves_.clear();
    build_node(std::move(samples), 0);
    tree_.leaf_values.resize(criterion_.outputs(), static_cast<Eigen::Index>(leaves_.size()));
    for (std::size_t i = 0; i < leaves_.size(); ++i) tree_.leaf_values.col(static_cast<Eigen::Index>(i)) = leaves_[i];
    return std::move(tree_);
  }

 private:
  struct Split {
    Eigen::Index feature = -1;
    double threshold = 0;
    double score = -std::numeric_limits<double>::infinity();
  };

  int build_node(std::vector<Sample> samples, int depth) {
    Stats total = criterion_.empty();
    for (const auto& s : samples) criterion_.add(total, s.row, s.weight);

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const bool depth_left = max_depth_ < 0 || depth < max_depth_;
    Split best;
    if (depth_left && samples.size() >= 2 && !total.pure()) best = find_split(samples, total);
    if (best.feature < 0) {
      Eigen::VectorXd value(criterion_.outputs());
      criterion_.leaf(total, value);
      tree_.nodes[static_cast<std::size_t>(id)].leaf = static_cast<int>(leaves_.size());
      leaves_.push_back(std::move(value));
      return id;
    }

    std::vector<Sample> left;
    std::vector<Sample> right;
    for (const auto& s : samples) {
      (value_of(s.row, best.feature) <= best.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = build_node(std::move(left), depth + 1);
    const int r = build_node(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  double value_of(Eigen::Index row, Eigen::Index feature) const { return x_.value(row, feature); }

  Split find_split(const std::vector<Sample>& samples, const Stats& total) {
    for (std::size_t i = 0; i < samples.size(); ++i) position_[static_cast<std::size_t>(samples[i].row)] = static_cast<int>(i);

    std::vector<Eigen::Index> features(static_cast<std::size_t>(columns_.cols()));
    std::iota(features.begin(), features.end(), Eigen::Index{0});
    shuffle(std::span(features), rng_);

    const double parent = total.score();
    const double tolerance = 1e-10 * std::max(1.0, std::abs(parent));
    Split best;
    for (std::size_t f = 0; f < features.size(); ++f) {
      if (static_cast<Eigen::Index>(f) >= max_features_ && best.feature >= 0) break;
      evaluate_feature(features[f], samples, total, best);
    }
    for (const auto& s : samples) position_[static_cast<std::size_t>(s.row)] = -1;

    if (best.feature < 0) return best;
    const double gain = best.score - parent;
    if (Criterion::kAllowZeroGain ? gain < -tolerance : gain <= tolerance) return Split{};
    return best;
  }

  void evaluate_feature(Eigen::Index feature, const std::vector<Sample>& samples, const Stats& total, Split& best) {
    columns_.gather(feature, samples, position_, entries_);
    std::sort(entries_.begin(), entries_.end());

    // Implicit zeros of a sparse column form one block sitting at value 0.
    Stats zero_block = criterion_.empty();
    bool has_zero_block = false;
    if (columns_.sparse()) {
      zero_block = total;
      for (const auto& [v, p] : entries_) {
        const auto& s = samples[static_cast<std::size_t>(p)];
        criterion_.add(zero_block, s.row, -s.weight);
      }
      has_zero_block = zero_block.w > 1e-12;
    }

    Stats left = criterion_.empty();
    Stats right = total;
    const auto zero_at = static_cast<std::size_t>(
        std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(0.0, -1)) - entries_.begin());
    const std::size_t n_items = entries_.size() + (has_zero_block ? 1 : 0);

    auto item_value = [&](std::size_t i) {
      if (has_zero_block) {
        if (i == zero_at) return 0.0;
        if (i > zero_at) return entries_[i - 1].first;
      }
      return entries_[i].first;
    };
    auto move_left = [&](std::size_t i) {
      if (has_zero_block && i == zero_at) {
        left.add(zero_block, 1.0);
        right.add(zero_block, -1.0);
        return;
      }
      const auto& e = entries_[has_zero_block && i > zero_at ? i - 1 : i];
      const auto& s = samples[static_cast<std::size_t>(e.second)];
      criterion_.add(left, s.row, s.weight);
      criterion_.add(right, s.row, -s.weight);
    };

    for (std::size_t i = 0; i + 1 < n_items; ++i) {
      move_left(i);
      const double here = item_value(i);
      const double next = item_value(i + 1);
      if (!(next > here)) continue;
      if (left.w <= 1e-12 || right.w <= 1e-12) continue;
      const double score = left.score() + right.score();
      if (score > best.score) {
        double threshold = here + (next - here) / 2;
        if (!(threshold < next)) threshold = here;
        best = {feature, threshold, score};
      }
    }
  }

  const FeatureMatrix& x_;
  const Columns& columns_;
  Criterion criterion_;
  int max_depth_;
  Eigen::Index max_features_;
  Rng rng_;
  std::vector<int> position_;
  std::vector<std::pair<double, int>> entries_;
  DecisionTree tree_;
  std::vector<Eigen::VectorXd> leaves_;
};

void check_training_set(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw Error(ErrorCode::LengthMismatch, "labels and rows differ");
  if (y.empty()) throw Error(ErrorCode::EmptyData, "empty training set");
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

Eigen::Index features_per_node(double frac, Eigen::Index d) {
  if (frac <= 0.0) return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(d)))));
  return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(frac * static_cast<double>(d))), 1, d);
}

}  // namespace

Eigen::MatrixXd ForestModel::votes(const FeatureMatrix& x) const {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(x.rows(), num_classes);
  for (const auto& tree : trees) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index best = 0;
      tree.value(x, i).maxCoeff(&best);
      v(i, best) += 1.0;
    }
  }
  return v;
}

Eigen::MatrixXd ForestModel::predict_proba(const FeatureMatrix& x) const {
  return votes(x) / static_cast<double>(std::max<std::size_t>(1, trees.size()));
}

std::vector<ClassId> ForestModel::predict(const FeatureMatrix& x) const { return argmax_rows(votes(x)); }

ForestModel train_random_forest(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes,
                                const ForestHyper& hyper) {
  check_training_set(x, y, num_classes);
  if (hyper.n_trees < 1 || hyper.threads < 1) throw Error(ErrorCode::InvalidConfig, "n_trees and threads must be >= 1");
  const Columns columns(x);
  const GiniCriterion criterion{y, num_classes};
  const Eigen::Index max_features = features_per_node(hyper.max_features_frac, x.cols());

  ForestModel model;
  model.num_classes = num_classes;
  model.trees.resize(static_cast<std::size_t>(hyper.n_trees));
  auto grow = [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(hyper.seed, t);
    std::vector<Sample> samples;
    if (hyper.bootstrap) {
      Rng rng(derive_seed(seed, 1));
      std::vector<double> weight(y.size(), 0.0);
      for (std::size_t i = 0; i < y.size(); ++i) weight[uniform_index(rng, y.size())] += 1.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (weight[i] > 0) samples.push_back({static_cast<Eigen::Index>(i), weight[i]});
      }
    } else {
      for (std::size_t i = 0; i < y.size(); ++i) samples.push_back({static_cast<Eigen::Index>(i), 1.0});
    }
    TreeBuilder<GiniCriterion> builder(x, columns, criterion, hyper.max_depth, max_features, derive_seed(seed, 2));
    model.trees[t] = builder.build(std::move(samples));
  };

  if (hyper.threads == 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) grow(t);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < hyper.threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = static_cast<std::size_t>(w); t < model.trees.size(); t += static_cast<std::size_t>(hyper.threads)) grow(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

Eigen::MatrixXd GbmModel::decision_function(const FeatureMatrix& x) const {
  Eigen::MatrixXd f = init_logits.transpose().replicate(x.rows(), 1);
  for (const auto& round : rounds) {
    for (std::size_t k = 0; k < round.size(); ++k) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) f(i, static_cast<Eigen::Index>(k)) += learning_rate * round[k].value(x, i)(0);
    }
  }
  return f;
}

Eigen::MatrixXd GbmModel::predict_proba(const FeatureMatrix& x) const { return softmax_rows(decision_function(x)); }

std::vector<ClassId> GbmModel::predict(const FeatureMatrix& x) const { return argmax_rows(decision_function(x)); }

double log_loss(const Eigen::MatrixXd& proba, std::span<const ClassId> y) {
  double sum = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum -= std::log(std::max(proba(static_cast<Eigen::Index>(i), y[i]), 1e-300));
  }
  return y.empty() ? 0.0 : sum / static_cast<double>(y.size());
}

GbmModel train_gradient_boosting(const FeatureMatrix& x, std::span<const ClassId> y, int num_classes,
                                 const GbmHyper& hyper, GbmTrace* trace) {
  check_training_set(x, y, num_classes);
  if (hyper.n_rounds < 0 || hyper.lr <= 0) throw Error(ErrorCode::InvalidConfig, "invalid gradient boosting hyperparameters");
  const auto n = static_cast<Eigen::Index>(y.size());

  GbmModel model;
  model.learning_rate = hyper.lr;
  model.init_logits.resize(num_classes);
  {
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    for (ClassId c : y) counts[static_cast<std::size_t>(c)] += 1.0;
    for (int k = 0; k < num_classes; ++k) {
      model.init_logits(k) = std::log(std::max(counts[static_cast<std::size_t>(k)], 1e-12) / static_cast<double>(n));
    }
  }

  const Columns columns(x);
  const Eigen::Index max_features = features_per_node(hyper.max_features_frac, x.cols());
  Eigen::MatrixXd logits = model.init_logits.transpose().replicate(n, 1);
  std::vector<Sample> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = {i, 1.0};
  std::vector<double> residual(static_cast<std::size_t>(n));

  if (trace) trace->train_log_loss.push_back(log_loss(softmax_rows(logits), y));
  for (int round = 0; round < hyper.n_rounds; ++round) {
    const Eigen::MatrixXd p = softmax_rows(logits);
    std::vector<DecisionTree> trees;
    trees.reserve(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        residual[static_cast<std::size_t>(i)] = (y[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0) - p(i, k);
      }
      const std::uint64_t seed = derive_seed(hyper.seed, static_cast<std::uint64_t>(round) * 4096 + static_cast<std::uint64_t>(k));
      TreeBuilder<MseCriterion> builder(x, columns, MseCriterion{residual}, hyper.max_depth, max_features, seed);
      trees.push_back(builder.build(all));
    }
    for (int k = 0; k < num_classes; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) logits(i, k) += hyper.lr * trees[static_cast<std::size_t>(k)].value(x, i)(0);
    }
    model.rounds.push_back(std::move(trees));
    if (trace) trace->train_log_loss.push_back(log_loss(softmax_rows(logits), y));
  }
  return model;
}

}  // namespace lawarea
