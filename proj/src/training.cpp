#include "lawarea/training.hpp"

#include <set>

#include "lawarea/error.hpp"
#include "lawarea/random.hpp"
#include "lawarea/topk.hpp"

namespace lawarea {

namespace {

// Typed access to a hyperparameter object; finish() rejects keys never read.
class HyperReader {
 public:
  explicit HyperReader(const Config& config) : config_(config) {
    if (!config_.is_object()) throw Error(ErrorCode::InvalidConfig, "hyperparameters must be a JSON object");
  }

  double real(const std::string& key, double fallback) {
    used_.insert(key);
    if (!config_.contains(key)) return fallback;
    const auto& v = config_.at(key);
    if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, key + " must be a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    used_.insert(key);
    if (!config_.contains(key)) return fallback;
    const auto& v = config_.at(key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<int>(v.get<double>()))) {
      return static_cast<int>(v.get<double>());
    }
    throw Error(ErrorCode::InvalidConfig, key + " must be an integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!config_.contains(key)) return fallback;
    if (!config_.at(key).is_boolean()) throw Error(ErrorCode::InvalidConfig, key + " must be a boolean");
    return config_.at(key).get<bool>();
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
    used_.insert(key);
    if (!config_.contains(key)) return fallback;
    const auto& v = config_.at(key);
    if (!v.is_array() || v.empty()) throw Error(ErrorCode::InvalidConfig, key + " must be a non-empty integer list");
    std::vector<int> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw Error(ErrorCode::InvalidConfig, key + " must be a non-empty integer list");
      out.push_back(x.get<int>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : config_.items()) {
      if (!used_.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown hyperparameter: " + key);
    }
  }

 private:
  const Config& config_;
  std::set<std::string> used_;
};

bool is_tfidf(std::string_view feature) { return feature == "tfidf-small" || feature == "tfidf-large"; }

std::optional<NetKind> net_kind_of(std::string_view classifier) {
  if (classifier == "cnn") return NetKind::CnnMax;
  if (classifier == "lstm") return NetKind::Lstm;
  if (classifier == "gru") return NetKind::Gru;
  if (classifier == "mean_pool") return NetKind::MeanPool;
  return std::nullopt;
}

W2VConfig embedding_config(const FitOptions& options, HyperReader& hyper) {
  W2VConfig cfg = options.w2v;
  cfg.architecture = options.feature == "w2v-cbow" ? Architecture::CBoW : Architecture::SkipGram;
  cfg.window = hyper.integer("w2v_window", cfg.window);
  cfg.dim = hyper.integer("w2v_dim", cfg.dim);
  cfg.epochs = hyper.integer("w2v_epochs", cfg.epochs);
  cfg.min_count = hyper.integer("w2v_min_count", cfg.min_count);
  cfg.negatives = hyper.integer("w2v_negatives", cfg.negatives);
  cfg.initial_lr = hyper.real("w2v_lr", cfg.initial_lr);
  cfg.seed = derive_seed(options.seed, 3);
  cfg.validate();
  return cfg;
}

nlohmann::json describe(const W2VConfig& c) {
  return {{"architecture", std::string(to_string(c.architecture))},
          {"window", c.window},
          {"min_count", c.min_count},
          {"dim", c.dim},
          {"negatives", c.negatives},
          {"epochs", c.epochs},
          {"initial_lr", c.initial_lr},
          {"seed", c.seed}};
}

Classifier train_classical(const std::string& name, const FeatureMatrix& x, const std::vector<ClassId>& y, int c,
                           HyperReader& hyper, std::uint64_t seed) {
  if (name == "logreg") {
    LogRegHyper h;
    h.l2 = hyper.real("l2", h.l2);
    h.lr = hyper.real("lr", h.lr);
    h.epochs = hyper.integer("epochs", h.epochs);
    h.batch = hyper.integer("batch", h.batch);
    h.seed = seed;
    hyper.finish();
    return train_logreg(x, y, c, h);
  }
  if (name == "svm") {
    SvmHyper h;
    h.c = hyper.real("c", h.c);
    h.lr = hyper.real("lr", h.lr);
    h.epochs = hyper.integer("epochs", h.epochs);
    h.seed = seed;
    hyper.finish();
    return train_linear_svm(x, y, c, h);
  }
  if (name == "forest") {
    ForestHyper h;
    h.n_trees = hyper.integer("n_trees", h.n_trees);
    h.max_depth = hyper.integer("max_depth", h.max_depth);
    h.max_features_frac = hyper.real("max_features_frac", h.max_features_frac);
    h.bootstrap = hyper.boolean("bootstrap", h.bootstrap);
    h.seed = seed;
    hyper.finish();
    return train_random_forest(x, y, c, h);
  }
  if (name == "gbm") {
    GbmHyper h;
    h.n_rounds = hyper.integer("n_rounds", h.n_rounds);
    h.max_depth = hyper.integer("max_depth", h.max_depth);
    h.lr = hyper.real("lr", h.lr);
    h.max_features_frac = hyper.real("max_features_frac", h.max_features_frac);
    h.seed = seed;
    hyper.finish();
    return train_gradient_boosting(x, y, c, h);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown classifier: " + name);
}

NeuralClassifier train_neural(NetKind kind, const EmbeddingTable& table, const std::vector<TokenSequence>& docs,
                              const std::vector<ClassId>& y, int c, HyperReader& hyper, std::uint64_t seed) {
  NetSpec<float> spec;
  spec.kind = kind;
  spec.embedding = std::make_shared<const Eigen::MatrixXf>(embedding_lookup<float>(table));
  spec.hidden = hyper.integer("hidden", spec.hidden);
  spec.filters = hyper.integer("filters", spec.filters);
  spec.widths = hyper.integers("widths", spec.widths);
  spec.dropout = hyper.real("dropout", spec.dropout);
  spec.num_classes = c;
  NetTrainHyper h;
  h.lr = hyper.real("lr", h.lr);
  h.batch = hyper.integer("batch", h.batch);
  h.epochs = hyper.integer("epochs", h.epochs);
  h.seed = seed;
  hyper.finish();

  const SequenceEncoder encoder(table);
  std::vector<LabeledSequence> data;
  data.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) data.push_back({encoder.encode(docs[i]), y[i]});
  const NetParams<float> trained = train_net(spec, data, h);

  NeuralClassifier out;
  out.spec.kind = spec.kind;
  out.spec.embedding = std::make_shared<const Eigen::MatrixXd>(embedding_lookup<double>(table));
  out.spec.hidden = spec.hidden;
  out.spec.filters = spec.filters;
  out.spec.widths = spec.widths;
  out.spec.dropout = spec.dropout;
  out.spec.num_classes = c;
  out.params.names = trained.names;
  for (const auto& t : trained.tensors) out.params.tensors.push_back(t.cast<double>());
  return out;
}

}  // namespace

bool is_neural_classifier(std::string_view name) noexcept { return net_kind_of(name).has_value(); }

ModelBundle fit_bundle(const Dataset& train_in, const FitOptions& options) {
  if (options.sampling != "none" && options.sampling != "rus") {
    throw Error(ErrorCode::InvalidConfig, "unknown sampling: " + options.sampling);
  }
  const Dataset train = options.sampling == "rus" ? random_under_sample(train_in, derive_seed(options.seed, 1)) : train_in;
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "no training documents");

  const bool neural = is_neural_classifier(options.classifier);
  const bool embedding_feature = options.feature == "w2v-cbow" || options.feature == "w2v-skipgram" || options.feature == "external";
  if (!is_tfidf(options.feature) && !embedding_feature) throw Error(ErrorCode::InvalidConfig, "unknown feature: " + options.feature);
  if (neural && !embedding_feature) throw Error(ErrorCode::InvalidConfig, "neural classifiers need an embedding feature");

  ModelBundle bundle;
  bundle.schema = train.schema;
  bundle.feature = options.feature;
  bundle.classifier = options.classifier;
  if (options.feature == "tfidf-small") {
    if (!options.lexicon) throw Error(ErrorCode::LexiconMissing, "tfidf-small uses the complete pipeline, which needs a lexicon");
    bundle.pipeline = {PipelineMode::Complete, options.lexicon};
  } else {
    bundle.pipeline = {PipelineMode::Simple, std::nullopt};
  }

  const std::vector<ClassId> y = train.labels();
  const int c = static_cast<int>(train.schema.size());
  const auto texts = train.texts();
  const auto docs = bundle.preprocess(texts);
  HyperReader hyper(options.hyper);

  bundle.info = {{"seed", options.seed},
                 {"sampling", options.sampling},
                 {"hyper", options.hyper},
                 {"train_documents", train.size()}};

  FeatureMatrix x;
  if (is_tfidf(options.feature)) {
    bundle.tfidf = fit_tfidf(docs, options.tfidf, bundle.pipeline.mode);
    std::vector<SparseVector> rows;
    rows.reserve(docs.size());
    for (const auto& d : docs) rows.push_back(transform_tfidf(*bundle.tfidf, d));
    x = FeatureMatrix::from_rows(rows, bundle.tfidf->dimension());
    bundle.info["tfidf"] = {{"min_count", options.tfidf.min_count},
                            {"max_doc_frac", options.tfidf.max_doc_frac},
                            {"max_ngram", options.tfidf.max_ngram}};
  } else {
    if (options.feature == "external") {
      if (!options.external_embeddings) throw Error(ErrorCode::InvalidConfig, "external feature needs an embedding table");
      bundle.embeddings = options.external_embeddings;
    } else {
      const W2VConfig cfg = embedding_config(options, hyper);
      bundle.embeddings = train_word2vec(docs, cfg);
      bundle.info["w2v"] = describe(cfg);
    }
    if (!neural) {
      std::vector<Eigen::VectorXd> rows;
      rows.reserve(docs.size());
      for (const auto& d : docs) rows.push_back(sentence_mean(*bundle.embeddings, d));
      x = FeatureMatrix::from_rows(rows, bundle.embeddings->dim());
    }
  }

  const std::uint64_t model_seed = derive_seed(options.seed, 2);
  if (const auto kind = net_kind_of(options.classifier)) {
    bundle.model = train_neural(*kind, *bundle.embeddings, docs, y, c, hyper, model_seed);
  } else {
    bundle.model = train_classical(options.classifier, x, y, c, hyper, model_seed);
  }

  bundle.class_priors = Eigen::VectorXd::Zero(c);
  for (ClassId label : y) bundle.class_priors(label) += 1.0;
  bundle.class_priors /= static_cast<double>(y.size());
  return bundle;
}

TrialFunction make_trial(const Dataset& train, const FitOptions& options) {
  return [&train, options](const Config& config, const Fold& fold, std::uint64_t seed) {
    FitOptions trial = options;
    trial.seed = seed;
    for (const auto& [key, value] : config.items()) trial.hyper[key] = value;
    const ModelBundle bundle = fit_bundle(train.subset(fold.train), trial);
    const Dataset validation = train.subset(fold.validation);
    return argmax_rows(bundle.predict_proba(bundle.preprocess(validation.texts())));
  };
}

}  // namespace lawarea
