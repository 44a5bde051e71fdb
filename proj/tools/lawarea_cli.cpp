// lawarea: command-line front end. Exit codes: 0 ok, 1 usage, 2 data, 3 internal.

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "lawarea/bundle.hpp"
#include "lawarea/corpus.hpp"
#include "lawarea/embeddings.hpp"
#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"
#include "lawarea/service.hpp"
#include "lawarea/synthetic.hpp"
#include "lawarea/training.hpp"
#include "lawarea/tuning.hpp"

namespace {

using namespace lawarea;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::KTooLarge:
    case ErrorCode::EmptySpace:
      return kExitUsage;
    case ErrorCode::IoError:
    case ErrorCode::MissingField:
    case ErrorCode::UnknownLabel:
    case ErrorCode::MalformedFile:
    case ErrorCode::DuplicateId:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::EmptyDataset:
    case ErrorCode::LexiconMissing:
    case ErrorCode::MalformedLine:
    case ErrorCode::EmptyVocabulary:
    case ErrorCode::HeaderMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DuplicateWord:
    case ErrorCode::SingleClass:
    case ErrorCode::EmptyData:
    case ErrorCode::HashMismatch:
    case ErrorCode::VersionUnsupported:
      return kExitData;
    default:
      return kExitInternal;
  }
}

Dataset read_input(const std::string& path, const std::string& format) {
  if (path.empty() || path == "-") return read_dataset(std::cin, format.empty() ? DatasetFormat::Jsonl : parse_format(format));
  return load_dataset(path, format.empty() ? format_from_extension(path) : parse_format(format));
}

void write_output(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << bytes;
}

std::optional<Lexicon> resolve_lexicon(const std::string& lexicon) {
  if (lexicon.empty() || lexicon == "none") return std::nullopt;
  if (lexicon == "synthetic") return make_lexicon(table1_spec().vocabulary);
  return load_lexicon_dir(lexicon);
}

struct Globals {
  std::uint64_t seed = 1;
};

void add_synth(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic labeled petition corpus");
  auto table1 = std::make_shared<bool>(false);
  auto scale = std::make_shared<double>(1.0);
  auto format = std::make_shared<std::string>("jsonl");
  auto out = std::make_shared<std::string>();
  cmd->add_flag("--table1", *table1, "Use the per-class counts and lengths of the petition dataset")->required();
  cmd->add_option("--scale", *scale, "Multiply every class count")->check(CLI::PositiveNumber);
  cmd->add_option("--format", *format, "jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--out", *out, "Output file (default stdout)");
  cmd->callback([=, &g] {
    const Dataset ds = generate_synthetic_corpus(table1_spec(*scale), g.seed);
    std::ostringstream s;
    write_dataset(s, ds, parse_format(*format));
    write_output(*out, s.str());
  });
}

void add_ingest(CLI::App& app) {
  auto* cmd = app.add_subcommand("ingest", "Validate a CSV/JSONL dataset and re-emit it as JSONL");
  auto input = std::make_shared<std::string>();
  auto format = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("input", *input, "Dataset path ('-' for stdin)")->required();
  cmd->add_option("--format", *format, "csv or jsonl (default: from extension)");
  cmd->add_option("--out", *out, "Output file (default stdout)");
  cmd->callback([=] {
    const Dataset ds = read_input(*input, *format);
    std::ostringstream s;
    write_dataset(s, ds, DatasetFormat::Jsonl);
    write_output(*out, s.str());
    const auto counts = ds.class_counts();
    std::cerr << ds.size() << " documents\n";
    for (std::size_t c = 0; c < counts.size(); ++c) std::cerr << ds.schema.code(static_cast<ClassId>(c)) << ' ' << counts[c] << '\n';
  });
}

void add_preprocess(CLI::App& app) {
  auto* cmd = app.add_subcommand("preprocess", "Run a preprocessing pipeline and print tokens as JSONL");
  auto input = std::make_shared<std::string>("-");
  auto format = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>("simple");
  auto lexicon = std::make_shared<std::string>("synthetic");
  cmd->add_option("--input", *input, "Dataset path ('-' for stdin)");
  cmd->add_option("--format", *format, "csv or jsonl");
  cmd->add_option("--mode", *mode, "simple or complete")->check(CLI::IsMember({"simple", "complete"}));
  cmd->add_option("--lexicon", *lexicon, "Lexicon directory or 'synthetic' (complete mode)");
  cmd->callback([=] {
    const Dataset ds = read_input(*input, *format);
    PipelineConfig config{parse_pipeline_mode(*mode), std::nullopt};
    if (config.mode == PipelineMode::Complete) config.lexicon = resolve_lexicon(*lexicon);
    for (const auto& d : ds.documents) {
      const TokenSequence t = run_pipeline(config, d.text);
      std::cout << json{{"id", d.id}, {"tokens", t.tokens}}.dump() << '\n';
    }
  });
}

void add_train_embeddings(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("train-embeddings", "Train Word2Vec on simple-pipeline tokens");
  auto input = std::make_shared<std::string>("-");
  auto format = std::make_shared<std::string>();
  auto arch = std::make_shared<std::string>("skipgram");
  auto out = std::make_shared<std::string>();
  auto cfg = std::make_shared<W2VConfig>();
  cmd->add_option("--input", *input, "Dataset path ('-' for stdin)");
  cmd->add_option("--format", *format, "csv or jsonl");
  cmd->add_option("--arch", *arch, "cbow or skipgram")->check(CLI::IsMember({"cbow", "skipgram"}));
  cmd->add_option("--dim", cfg->dim, "Vector size");
  cmd->add_option("--window", cfg->window, "Context window");
  cmd->add_option("--min-count", cfg->min_count, "Minimum word count");
  cmd->add_option("--negatives", cfg->negatives, "Negative samples per pair");
  cmd->add_option("--epochs", cfg->epochs, "Passes over the corpus");
  cmd->add_option("--threads", cfg->threads, "Worker threads (1 = deterministic)");
  cmd->add_option("--out", *out, "word2vec text file")->required();
  cmd->callback([=, &g] {
    const Dataset ds = read_input(*input, *format);
    std::vector<TokenSequence> docs;
    for (const auto& d : ds.documents) docs.push_back(simple_pipeline(d.text));
    W2VConfig c = *cfg;
    c.architecture = *arch == "cbow" ? Architecture::CBoW : Architecture::SkipGram;
    c.seed = g.seed;
    Word2VecTrace trace;
    save_embeddings_text(*out, train_word2vec(docs, c, &trace));
    for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) std::cerr << "epoch " << e + 1 << " loss " << trace.epoch_loss[e] << '\n';
  });
}

struct FitArgs {
  std::string input = "-";
  std::string format;
  std::string feature = "tfidf-large";
  std::string model = "logreg";
  std::string sampling = "none";
  std::string hyper = "{}";
  std::string lexicon = "synthetic";
  std::string embeddings;
  std::size_t min_count = 10;
  double max_doc_frac = 0.9;
  int w2v_dim = 100;
  int w2v_window = 5;
  int w2v_epochs = 5;
  int w2v_min_count = 5;
};

void add_fit_options(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--input", a.input, "Dataset path ('-' for stdin)");
  cmd->add_option("--format", a.format, "csv or jsonl");
  cmd->add_option("--feature", a.feature, "tfidf-small, tfidf-large, w2v-cbow, w2v-skipgram or external")
      ->check(CLI::IsMember({"tfidf-small", "tfidf-large", "w2v-cbow", "w2v-skipgram", "external"}));
  cmd->add_option("--model", a.model, "logreg, svm, forest, gbm, cnn, lstm, gru or mean_pool")
      ->check(CLI::IsMember({"logreg", "svm", "forest", "gbm", "cnn", "lstm", "gru", "mean_pool"}));
  cmd->add_option("--sampling", a.sampling, "none or rus")->check(CLI::IsMember({"none", "rus"}));
  cmd->add_option("--hyper", a.hyper, "Classifier hyperparameters as a JSON object");
  cmd->add_option("--lexicon", a.lexicon, "Lexicon directory or 'synthetic' (tfidf-small)");
  cmd->add_option("--embeddings", a.embeddings, "word2vec text file (external feature)");
  cmd->add_option("--min-count", a.min_count, "TF-IDF: keep n-grams seen more often than this");
  cmd->add_option("--max-doc-frac", a.max_doc_frac, "TF-IDF: drop n-grams in at least this fraction of documents");
  cmd->add_option("--w2v-dim", a.w2v_dim, "Embedding size");
  cmd->add_option("--w2v-window", a.w2v_window, "Embedding context window");
  cmd->add_option("--w2v-epochs", a.w2v_epochs, "Embedding epochs");
  cmd->add_option("--w2v-min-count", a.w2v_min_count, "Embedding minimum word count");
}

FitOptions to_fit_options(const FitArgs& a, std::uint64_t seed) {
  FitOptions o;
  o.feature = a.feature;
  o.classifier = a.model;
  o.sampling = a.sampling;
  o.hyper = json::parse(a.hyper, nullptr, false);
  if (o.hyper.is_discarded() || !o.hyper.is_object()) throw Error(ErrorCode::InvalidArgument, "--hyper must be a JSON object");
  o.tfidf.min_count = a.min_count;
  o.tfidf.max_doc_frac = a.max_doc_frac;
  o.w2v.dim = a.w2v_dim;
  o.w2v.window = a.w2v_window;
  o.w2v.epochs = a.w2v_epochs;
  o.w2v.min_count = a.w2v_min_count;
  if (a.feature == "tfidf-small") o.lexicon = resolve_lexicon(a.lexicon);
  if (a.feature == "external") {
    if (a.embeddings.empty()) throw Error(ErrorCode::InvalidArgument, "--embeddings is required for the external feature");
    o.external_embeddings = load_embeddings_text(a.embeddings);
  }
  o.seed = seed;
  return o;
}

json dataset_to_json(const Dataset& ds) {
  json docs = json::array();
  for (const auto& d : ds.documents) {
    json j = {{"id", d.id}, {"text", d.text}};
    if (d.label) j["label"] = ds.schema.code(*d.label);
    docs.push_back(j);
  }
  return docs;
}

void add_fit(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("fit", "Split, train and save a model bundle; prints the held-out set as JSON");
  auto a = std::make_shared<FitArgs>();
  auto bundle_dir = std::make_shared<std::string>("bundle");
  auto test_frac = std::make_shared<double>(0.1);
  add_fit_options(cmd, *a);
  cmd->add_option("--bundle", *bundle_dir, "Output bundle directory");
  cmd->add_option("--test-frac", *test_frac, "Stratified hold-out fraction (0 trains on everything)")->check(CLI::Range(0.0, 0.99));
  cmd->callback([=, &g] {
    const Dataset ds = read_input(a->input, a->format);
    const FitOptions options = to_fit_options(*a, g.seed);
    Split split{ds, Dataset{{}, ds.schema}};
    if (*test_frac > 0) split = stratified_split(ds, *test_frac, derive_seed(g.seed, 101));
    ModelBundle bundle = fit_bundle(split.train, options);
    save_bundle(bundle, *bundle_dir);
    std::cout << json{{"bundle", std::filesystem::absolute(*bundle_dir).string()},
                      {"model_id", bundle.model_id},
                      {"train_documents", split.train.size()},
                      {"test", dataset_to_json(split.test)}}
                     .dump()
              << '\n';
  });
}

void add_search(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("search", "Random hyperparameter search with cross-validation on a training set");
  auto a = std::make_shared<FitArgs>();
  auto n = std::make_shared<int>(50);
  auto cv = std::make_shared<std::string>("kfold");
  auto folds = std::make_shared<int>(5);
  auto metric = std::make_shared<std::string>("macro_f1");
  auto space_file = std::make_shared<std::string>(default_search_space_file().string());
  auto space_name = std::make_shared<std::string>();
  auto table = std::make_shared<std::string>();
  auto threads = std::make_shared<int>(1);
  add_fit_options(cmd, *a);
  cmd->add_option("--n", *n, "Sampled configurations")->check(CLI::PositiveNumber);
  cmd->add_option("--cv", *cv, "kfold or shuffle-split")->check(CLI::IsMember({"kfold", "shuffle-split"}));
  cmd->add_option("--folds", *folds, "Folds (kfold) or splits (shuffle-split)");
  cmd->add_option("--metric", *metric, "accuracy or macro_f1")->check(CLI::IsMember({"accuracy", "macro_f1"}));
  cmd->add_option("--space-file", *space_file, "Search-space JSON file");
  cmd->add_option("--space", *space_name, "Space name (default: the model name)");
  cmd->add_option("--cv-table", *table, "Write the per-fold table as CSV");
  cmd->add_option("--threads", *threads, "Parallel trials");
  cmd->callback([=, &g] {
    const Dataset ds = read_input(a->input, a->format);
    const FitOptions options = to_fit_options(*a, g.seed);
    const auto spaces = load_search_spaces(*space_file);
    const std::string name = space_name->empty() ? a->model : *space_name;
    const auto it = spaces.find(name);
    if (it == spaces.end()) throw Error(ErrorCode::InvalidArgument, "no search space named " + name);
    SearchSpace space = it->second;
    if ((a->feature == "w2v-cbow" || a->feature == "w2v-skipgram") && spaces.contains("w2v")) {
      for (const auto& [k, v] : spaces.at("w2v").params) space.params.emplace(k, v);
    }
    CvScheme scheme;
    scheme.kind = *cv == "kfold" ? CvScheme::Kind::KFold : CvScheme::Kind::ShuffleSplit;
    scheme.k = *folds;
    scheme.n_splits = *folds;
    scheme.seed = derive_seed(g.seed, 7);
    const auto labels = ds.labels();
    const SearchResult result = random_search(make_trial(ds, options), space, labels, static_cast<int>(ds.schema.size()),
                                              scheme, parse_metric(*metric), *n, g.seed, *threads);
    if (!table->empty()) {
      std::ofstream out(*table, std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + *table);
      write_cv_table_csv(out, result.cv_table);
    }
    std::cout << json{{"best_config", result.best_config}, {"best_trial", result.best_trial}, {"best_score", result.best_score},
                      {"metric", *metric}}
                     .dump()
              << '\n';
  });
}

void add_evaluate(CLI::App& app) {
  auto* cmd = app.add_subcommand("evaluate", "Score a bundle on the held-out set printed by fit");
  auto input = std::make_shared<std::string>("-");
  auto format = std::make_shared<std::string>("json");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--input", *input, "fit output ('-' for stdin)");
  cmd->add_option("--format", *format, "text, json, csv or heatmap");
  cmd->add_option("--out", *out, "Output file (default stdout)");
  cmd->callback([=] {
    const ReportFormat fmt = parse_report_format(*format);
    std::string text;
    if (*input == "-") {
      std::ostringstream s;
      s << std::cin.rdbuf();
      text = s.str();
    } else {
      std::ifstream in(*input);
      if (!in) throw Error(ErrorCode::IoError, "cannot open " + *input);
      std::ostringstream s;
      s << in.rdbuf();
      text = s.str();
    }
    const json fit = json::parse(text, nullptr, false);
    if (fit.is_discarded() || !fit.contains("bundle") || !fit.contains("test")) {
      throw Error(ErrorCode::MalformedFile, "evaluate expects the JSON printed by fit");
    }
    const ModelBundle bundle = load_bundle(fit["bundle"].get<std::string>());
    std::vector<std::string> texts;
    std::vector<ClassId> labels;
    for (const auto& d : fit["test"]) {
      texts.push_back(d.at("text").get<std::string>());
      labels.push_back(bundle.schema.index_of(d.at("label").get<std::string>()));
    }
    if (labels.empty()) throw Error(ErrorCode::EmptyData, "the held-out set is empty");
    EvaluationReport report = evaluate(bundle.schema, bundle.predict_proba(texts), labels);
    report.classifier = bundle.classifier;
    report.feature = bundle.feature;
    report.sampling = bundle.info.value("sampling", "none");
    write_output(*out, render_report(std::span(&report, 1), fmt));
  });
}

void add_predict(CLI::App& app) {
  auto* cmd = app.add_subcommand("predict", "Print the k most likely law areas for a text");
  auto bundle_dir = std::make_shared<std::string>();
  auto text = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(5);
  cmd->add_option("--bundle", *bundle_dir, "Bundle directory")->required();
  cmd->add_option("--text", *text, "Petition text (default: stdin)");
  cmd->add_option("-k", *k, "Number of labels")->check(CLI::PositiveNumber);
  cmd->callback([=] {
    std::string input = *text;
    if (input.empty()) {
      std::ostringstream s;
      s << std::cin.rdbuf();
      input = s.str();
    }
    const ModelBundle bundle = load_bundle(*bundle_dir);
    const Prediction p = predict(bundle, input, *k);
    if (p.degraded) std::cerr << "warning: no tokens survived preprocessing; ranking by class prior\n";
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
      char conf[32];
      std::snprintf(conf, sizeof conf, "%.6f", p.labels[i].confidence);
      std::cout << i + 1 << '\t' << p.labels[i].code << '\t' << conf << '\t' << p.labels[i].display_name << '\n';
    }
  });
}

void add_serve(CLI::App& app) {
  auto* cmd = app.add_subcommand("serve", "Serve the /v1 HTTP API for a bundle");
  auto bundle_dir = std::make_shared<std::string>();
  auto host = std::make_shared<std::string>("127.0.0.1");
  auto port = std::make_shared<int>(8080);
  auto log = std::make_shared<std::string>("feedback.jsonl");
  cmd->add_option("--bundle", *bundle_dir, "Bundle directory")->required();
  cmd->add_option("--host", *host, "Listen address");
  cmd->add_option("--port", *port, "Listen port (0 = any)");
  cmd->add_option("--feedback-log", *log, "Feedback JSONL file");
  cmd->callback([=] {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    PredictionService service(*log);
    service.set_bundle(std::make_shared<const ModelBundle>(load_bundle(*bundle_dir)));
    const int bound = service.bind(*host, *port);
    std::cerr << "serving " << *bundle_dir << " on http://" << *host << ':' << bound << "/v1\n";
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      service.stop();
    });
    service.listen();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Law-area classification toolkit for short petition texts"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values");
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();

  add_synth(app, g);
  add_ingest(app);
  add_preprocess(app);
  add_train_embeddings(app, g);
  add_fit(app, g);
  add_search(app, g);
  add_evaluate(app);
  add_predict(app);
  add_serve(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
