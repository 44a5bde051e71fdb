// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances and thresholds are fixed here and never read from the environment.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lawarea/bundle.hpp"
#include "lawarea/embeddings.hpp"
#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"
#include "lawarea/features.hpp"
#include "lawarea/log.hpp"
#include "lawarea/neural.hpp"
#include "lawarea/preprocess.hpp"
#include "lawarea/random.hpp"
#include "lawarea/synthetic.hpp"
#include "lawarea/training.hpp"
#include "lawarea/tuning.hpp"
#include "tfidf_oracle.hpp"

using namespace lawarea;
namespace fs = std::filesystem;

namespace {

constexpr double kTfidfTolerance = 1e-12;
constexpr int kTfidfCorpora = 10;
constexpr std::size_t kTfidfMaxDocs = 50;
constexpr std::size_t kExpectedRusDocuments = 4140;
constexpr int kGradientDraws = 20;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientEpsilon = 1e-5;
constexpr double kE2eAccuracy = 0.95;
constexpr double kE2eMacroF1 = 0.90;
constexpr double kE2eTop5 = 0.99;
constexpr int kE2eMaxEpochs = 10;
constexpr double kPlantedFraction = 0.95;
constexpr int kPlantedEpochs = 15;
constexpr double kMetricTolerance = 1e-12;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool majority(const std::vector<bool>& votes) {
  return 2 * static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true)) > votes.size();
}

// ---------------------------------------------------------------------------

Outcome tfidf_oracle() {
  Rng rng(20240501);
  double worst = 0;
  int compared = 0;
  for (int corpus_id = 0; corpus_id < kTfidfCorpora; ++corpus_id) {
    const std::size_t docs = 5 + uniform_index(rng, kTfidfMaxDocs - 4);
    const std::size_t vocab = 4 + uniform_index(rng, 10);
    std::vector<TokenSequence> corpus;
    std::vector<std::vector<std::string>> raw;
    for (std::size_t d = 0; d < docs; ++d) {
      TokenSequence s;
      const std::size_t len = uniform_index(rng, 20);
      for (std::size_t i = 0; i < len; ++i) s.tokens.push_back("t" + std::to_string(uniform_index(rng, vocab)));
      raw.push_back(s.tokens);
      corpus.push_back(std::move(s));
    }
    TfidfOptions o;
    o.min_count = uniform_index(rng, 3);
    o.max_doc_frac = 0.6 + 0.35 * uniform01(rng);
    o.max_ngram = 2;
    const auto ref = oracle::fit(raw, static_cast<double>(o.min_count), o.max_doc_frac, o.max_ngram);
    if (ref.idf.empty()) return {false, "corpus " + std::to_string(corpus_id) + " has an empty reference vocabulary"};
    const TfidfModel model = fit_tfidf(corpus, o);
    if (static_cast<std::size_t>(model.dimension()) != ref.idf.size()) {
      return {false, "vocabulary size differs on corpus " + std::to_string(corpus_id)};
    }
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const SparseVector v = transform_tfidf(model, corpus[d]);
      const auto expected = oracle::transform(ref, raw[d], o.max_ngram);
      for (Eigen::Index j = 0; j < model.dimension(); ++j) {
        const auto it = expected.find(model.vocabulary[static_cast<std::size_t>(j)]);
        worst = std::max(worst, std::abs(v.coeff(j) - (it == expected.end() ? 0.0 : it->second)));
        ++compared;
      }
    }
  }
  return {worst <= kTfidfTolerance, std::to_string(compared) + " entries, max abs diff " + fmt("%.3g", worst)};
}

Outcome rus_reproduction() {
  const SyntheticSpec spec = table1_spec(1.0);
  const Dataset ds = generate_synthetic_corpus(spec, 7);
  if (ds.class_counts() != table1_counts()) return {false, "synthetic counts differ from the table"};
  const Split split = stratified_split(ds, 0.1, 7);
  const Dataset balanced = random_under_sample(split.train, 7);
  const auto counts = balanced.class_counts();
  const bool even = std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == counts.front(); });
  return {balanced.size() == kExpectedRusDocuments && even,
          "train " + std::to_string(split.train.size()) + ", after under-sampling " + std::to_string(balanced.size()) +
              " (" + std::to_string(counts.size()) + " x " + std::to_string(counts.front()) + ")"};
}

NetSpec<double> gradient_spec(NetKind kind, Rng& rng) {
  NetSpec<double> spec;
  spec.kind = kind;
  const int vocab = 30, dim = 6;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(vocab + 2, dim);
  for (Eigen::Index i = 2; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) e(i, j) = 2 * uniform01(rng) - 1;
  }
  spec.embedding = std::make_shared<const Eigen::MatrixXd>(e);
  spec.hidden = 5;
  spec.filters = 3;
  spec.widths = {2, 3};
  spec.num_classes = 6;
  return spec;
}

Outcome gradient_checks() {
  std::string detail;
  bool pass = true;
  const std::pair<NetKind, const char*> kinds[] = {
      {NetKind::Lstm, "lstm"}, {NetKind::Gru, "gru"}, {NetKind::CnnMax, "cnn_max"}, {NetKind::MeanPool, "linear_head"}};
  for (const auto& [kind, name] : kinds) {
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(kind)));
    double worst = 0;
    for (int draw = 0; draw < kGradientDraws; ++draw) {
      const NetSpec<double> spec = gradient_spec(kind, rng);
      const NetParams<double> params = init_params(spec, rng());
      std::vector<int> ids;
      const std::size_t len = 2 + uniform_index(rng, 10);
      for (std::size_t i = 0; i < len; ++i) ids.push_back(1 + static_cast<int>(uniform_index(rng, 31)));
      const auto label = static_cast<ClassId>(uniform_index(rng, 6));
      worst = std::max(worst, gradient_check(spec, params, pad_sequence(ids), label, kGradientEpsilon));
    }
    pass &= worst < kGradientTolerance;
    detail += std::string(detail.empty() ? "" : ", ") + name + " " + fmt("%.2e", worst);
  }
  return {pass, std::to_string(kGradientDraws) + " draws each; max rel err " + detail};
}

Outcome vocabulary_ordering() {
  const SyntheticSpec spec = table1_spec(0.1);
  const Dataset ds = generate_synthetic_corpus(spec, 11);
  const Lexicon lex = make_lexicon(spec.vocabulary);
  std::vector<TokenSequence> complete, simple;
  for (const auto& d : ds.documents) {
    complete.push_back(complete_pipeline(d.text, lex));
    simple.push_back(simple_pipeline(d.text));
  }
  const auto small = fit_tfidf(complete, {}, PipelineMode::Complete).dimension();
  const auto large = fit_tfidf(simple, {}, PipelineMode::Simple).dimension();
  return {small < large, "Small " + std::to_string(small) + " vs Large " + std::to_string(large) + " terms"};
}

Outcome embedding_freeze() {
  Rng rng(5);
  std::string detail;
  bool pass = true;
  for (NetKind kind : {NetKind::Lstm, NetKind::Gru, NetKind::CnnMax}) {
    NetSpec<float> spec;
    spec.kind = kind;
    Eigen::MatrixXf e = Eigen::MatrixXf::Zero(42, 8);
    for (Eigen::Index i = 2; i < e.rows(); ++i) {
      for (Eigen::Index j = 0; j < e.cols(); ++j) e(i, j) = static_cast<float>(2 * uniform01(rng) - 1);
    }
    spec.embedding = std::make_shared<const Eigen::MatrixXf>(e);
    spec.hidden = 6;
    spec.filters = 4;
    spec.num_classes = 4;
    std::vector<LabeledSequence> data;
    for (int i = 0; i < 24; ++i) {
      std::vector<int> ids;
      for (int t = 0; t < 8; ++t) ids.push_back(1 + static_cast<int>(uniform_index(rng, 41)));
      data.push_back({pad_sequence(ids), i % 4});
    }
    const std::vector<unsigned char> before(reinterpret_cast<const unsigned char*>(spec.embedding->data()),
                                            reinterpret_cast<const unsigned char*>(spec.embedding->data() + e.size()));
    NetTrainHyper h;
    h.epochs = 3;
    h.batch = 8;
    h.lr = 0.05;
    const NetParams<float> trained = train_net(spec, data, h);
    const bool same = std::memcmp(before.data(), spec.embedding->data(), before.size()) == 0 && *spec.embedding == e;
    const bool moved = trained.tensors != init_params(spec, h.seed).tensors;
    pass &= same && moved;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(kind)) + (same ? " identical" : " CHANGED");
  }
  return {pass, detail};
}

Outcome pad_invariance() {
  Rng rng(17);
  int checked = 0, differing = 0;
  for (NetKind kind : {NetKind::Lstm, NetKind::Gru, NetKind::CnnMax}) {
    for (int draw = 0; draw < 50; ++draw) {
      const NetSpec<double> spec = gradient_spec(kind, rng);
      const NetParams<double> params = init_params(spec, rng());
      std::vector<int> ids;
      const std::size_t len = 1 + uniform_index(rng, 60);
      for (std::size_t i = 0; i < len; ++i) ids.push_back(1 + static_cast<int>(uniform_index(rng, 31)));
      const Eigen::VectorXd base = forward(spec, params, pad_sequence(ids));
      ids.resize(ids.size() + 1 + uniform_index(rng, 200), kPadId);
      differing += forward(spec, params, pad_sequence(ids)) != base;
      ++checked;
    }
  }
  return {differing == 0, std::to_string(checked) + " sequences, " + std::to_string(differing) + " with changed logits"};
}

Outcome end_to_end() {
  std::vector<bool> votes;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const SyntheticSpec spec = table1_spec(0.1);
    const Dataset ds = generate_synthetic_corpus(spec, seed);
    const Split split = stratified_split(ds, 0.1, derive_seed(seed, 101));
    FitOptions o;
    o.feature = "w2v-skipgram";
    o.classifier = "lstm";
    o.hyper = {{"hidden", 32}, {"epochs", kE2eMaxEpochs}, {"w2v_dim", 16}};
    o.seed = seed;
    const ModelBundle bundle = fit_bundle(split.train, o);
    const auto labels = split.test.labels();
    const EvaluationReport r = evaluate(bundle.schema, bundle.predict_proba(split.test.texts()), labels);
    const double top1 = r.top_k_accuracy.at(1), top5 = r.top_k_accuracy.at(5);
    const bool ok = r.accuracy >= kE2eAccuracy && r.macro_f1 >= kE2eMacroF1 && top5 >= kE2eTop5 && top5 >= top1;
    votes.push_back(ok);
    detail += std::string(detail.empty() ? "" : "; ") + "seed " + std::to_string(seed) + ": acc " + fmt("%.4f", r.accuracy) +
              " f1 " + fmt("%.4f", r.macro_f1) + " @1 " + fmt("%.4f", top1) + " @5 " + fmt("%.4f", top5);
  }
  return {majority(votes), detail};
}

// Planted pairs (p_i, q_i) always appear within two positions of each other
// inside filler text; p_i and q_j (i != j) never share a sentence.
Outcome planted_neighbors() {
  constexpr int kPairs = 20, kFiller = 300, kSentences = 3000, kLength = 12;
  std::vector<bool> votes;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    Rng rng(derive_seed(seed, 55));
    std::vector<TokenSequence> corpus;
    for (int s = 0; s < kSentences; ++s) {
      TokenSequence sent;
      for (int t = 0; t < kLength; ++t) sent.tokens.push_back("f" + std::to_string(uniform_index(rng, kFiller)));
      const int pair = static_cast<int>(uniform_index(rng, kPairs));
      const std::size_t at = uniform_index(rng, kLength - 2);
      sent.tokens[at] = "p" + std::to_string(pair);
      sent.tokens[at + 1 + uniform_index(rng, 2)] = "q" + std::to_string(pair);
      corpus.push_back(std::move(sent));
    }
    W2VConfig c;
    c.architecture = Architecture::SkipGram;
    c.dim = 32;
    c.window = 5;
    c.min_count = 1;
    c.epochs = kPlantedEpochs;
    c.seed = seed;
    const EmbeddingTable table = train_word2vec(corpus, c);
    auto vec = [&](const std::string& w) -> Eigen::VectorXd { return table.row(*table.find(w)).transpose().normalized(); };
    int won = 0;
    for (int i = 0; i < kPairs; ++i) {
      const Eigen::VectorXd p = vec("p" + std::to_string(i));
      const double planted = p.dot(vec("q" + std::to_string(i)));
      double best_other = -2;
      for (int j = 0; j < kPairs; ++j) {
        if (j != i) best_other = std::max(best_other, p.dot(vec("q" + std::to_string(j))));
      }
      won += planted > best_other;
    }
    const double frac = static_cast<double>(won) / kPairs;
    votes.push_back(frac >= kPlantedFraction);
    detail += std::string(detail.empty() ? "" : "; ") + "seed " + std::to_string(seed) + ": " + fmt("%.2f", frac);
  }
  return {majority(votes), "fraction of pairs beating every non-co-occurring pair, " + detail};
}

Outcome tuning_determinism() {
  const SyntheticSpec spec = table1_spec(0.02);
  const Dataset ds = generate_synthetic_corpus(spec, 13);
  FitOptions o;
  o.feature = "tfidf-large";
  o.classifier = "logreg";
  o.tfidf.min_count = 2;
  const SearchSpace space = load_search_spaces(default_search_space_file()).at("logreg");
  CvScheme scheme;
  scheme.seed = 4;
  const auto labels = ds.labels();
  auto run = [&] {
    const SearchResult r =
        random_search(make_trial(ds, o), space, labels, static_cast<int>(ds.schema.size()), scheme, Metric::MacroF1, 6, 77);
    std::ostringstream csv;
    write_cv_table_csv(csv, r.cv_table);
    return std::make_pair(r, csv.str());
  };
  std::vector<std::string> warnings;
  auto previous = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const auto [a, csv_a] = run();
  const auto [b, csv_b] = run();
  set_warning_sink(previous);

  std::map<int, std::pair<double, int>> sums;
  for (const auto& row : a.cv_table) {
    sums[row.trial_id].first += row.score;
    sums[row.trial_id].second += 1;
  }
  int best = -1;
  double best_mean = -1;
  for (const auto& [trial, s] : sums) {
    const double mean = s.first / s.second;
    if (mean > best_mean) {
      best_mean = mean;
      best = trial;
    }
  }
  const bool identical = csv_a == csv_b;
  const bool rescored = best == a.best_trial && std::abs(best_mean - a.best_score) < 1e-15 &&
                        canonical(a.best_config) == a.cv_table[static_cast<std::size_t>(best) * 5].config;
  return {identical && rescored && a.cv_table.size() == 30,
          std::string(identical ? "cv_table byte-identical" : "cv_table DIFFERS") + ", " + std::to_string(a.cv_table.size()) +
              " rows, best trial " + std::to_string(a.best_trial) + " (re-scored " + std::to_string(best) + ", mean " +
              fmt("%.4f", best_mean) + ")"};
}

Outcome metric_identities() {
  std::vector<std::string> warnings;
  auto previous = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  Rng rng(3);
  Eigen::MatrixXd proba(500, 18);
  for (Eigen::Index i = 0; i < proba.size(); ++i) proba(i) = uniform01(rng);
  proba.array().colwise() /= proba.rowwise().sum().array();
  std::vector<ClassId> labels;
  for (int i = 0; i < 500; ++i) labels.push_back(static_cast<ClassId>(uniform_index(rng, 18)));
  const EvaluationReport r = evaluate(LabelSchema::canonical(), proba, labels, {1, 5});
  const double via_trace = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total());
  const std::vector<ClassId> truth{0, 0, 1, 1}, pred{0, 1, 1, 1};
  const double fixture = macro_f1(pred, truth, 2);
  set_warning_sink(previous);
  const double expected = (2.0 / 3.0 + 0.8) / 2.0;
  const bool pass = r.top_k_accuracy.at(1) == r.accuracy && std::abs(via_trace - r.accuracy) <= kMetricTolerance &&
                    std::abs(fixture - expected) <= kMetricTolerance;
  return {pass, "top1 " + fmt("%.4f", r.top_k_accuracy.at(1)) + " = acc " + fmt("%.4f", r.accuracy) + " = trace/total " +
                    fmt("%.4f", via_trace) + "; fixture macro-F1 " + fmt("%.16f", fixture)};
}

Outcome bundle_round_trip() {
  const SyntheticSpec spec = table1_spec(0.05);
  const Dataset ds = generate_synthetic_corpus(spec, 19);
  const Split split = stratified_split(ds, 0.1, 19);
  FitOptions o;
  o.feature = "w2v-skipgram";
  o.classifier = "lstm";
  o.hyper = {{"hidden", 8}, {"epochs", 2}, {"w2v_dim", 8}};
  ModelBundle bundle = fit_bundle(split.train, o);
  const fs::path dir = fs::temp_directory_path() / "lawarea_acceptance_bundle";
  fs::remove_all(dir);
  save_bundle(bundle, dir);
  const ModelBundle loaded = load_bundle(dir);

  int identical = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& text = split.test.documents[i].text;
    const Prediction a = predict(bundle, text), b = predict(loaded, text);
    bool same = a.labels.size() == 5 && a.labels.size() == b.labels.size();
    for (std::size_t k = 0; same && k < a.labels.size(); ++k) {
      same = a.labels[k].code == b.labels[k].code && a.labels[k].confidence == b.labels[k].confidence;
    }
    identical += same;
  }

  {
    std::fstream f(dir / "net_head_W.tensor", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(24);
    const char c = static_cast<char>(f.get());
    f.seekp(24);
    f.put(static_cast<char>(c ^ 0x5a));
  }
  std::string corrupted = "loaded";
  try {
    load_bundle(dir);
  } catch (const Error& e) {
    corrupted = std::string(to_string(e.code()));
  }
  fs::remove_all(dir);
  return {identical == 20 && corrupted == "HashMismatch",
          std::to_string(identical) + "/20 identical top-5 lists; corrupted member -> " + corrupted};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"tfidf-oracle-equivalence", 1, tfidf_oracle},
      {"rus-structural-reproduction", 10, rus_reproduction},
      {"gradient-checks", 120, gradient_checks},
      {"vocabulary-ordering", 30, vocabulary_ordering},
      {"embedding-freeze", 0, embedding_freeze},
      {"pad-invariance", 0, pad_invariance},
      {"end-to-end-learnability", 600, end_to_end},
      {"word2vec-planted-neighbors", 120, planted_neighbors},
      {"tuning-determinism", 0, tuning_determinism},
      {"metric-identities", 0, metric_identities},
      {"bundle-round-trip", 0, bundle_round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
      o.pass = false;
      o.detail += " [over the " + fmt("%.0f", c.budget_seconds) + " s budget]";
    }
    failures += !o.pass;
    std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
