#include "lawarea/bundle.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "lawarea/error.hpp"
#include "lawarea/hash.hpp"
#include "lawarea/tensor_io.hpp"
#include "lawarea/topk.hpp"

namespace lawarea {

namespace fs = std::filesystem;
using nlohmann::json;

Representation ModelBundle::representation() const {
  if (tfidf) return Representation::Tfidf;
  return std::holds_alternative<NeuralClassifier>(model) ? Representation::Sequence : Representation::SentenceMean;
}

std::vector<TokenSequence> ModelBundle::preprocess(std::span<const std::string> texts) const {
  std::vector<TokenSequence> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back(run_pipeline(pipeline, t));
  return docs;
}

Eigen::MatrixXd ModelBundle::predict_proba(const std::vector<TokenSequence>& docs) const {
  if (const auto* net = std::get_if<NeuralClassifier>(&model)) {
    if (!embeddings) throw Error(ErrorCode::ShapeMismatch, "network bundle without embeddings");
    const SequenceEncoder encoder(*embeddings);
    std::vector<PaddedSequence> seqs;
    seqs.reserve(docs.size());
    for (const auto& d : docs) seqs.push_back(encoder.encode(d));
    return lawarea::predict_proba(net->spec, net->params, std::span<const PaddedSequence>(seqs));
  }

  FeatureMatrix x;
  if (tfidf) {
    std::vector<SparseVector> rows;
    rows.reserve(docs.size());
    for (const auto& d : docs) rows.push_back(transform_tfidf(*tfidf, d));
    x = FeatureMatrix::from_rows(rows, tfidf->dimension());
  } else if (embeddings) {
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(docs.size());
    for (const auto& d : docs) rows.push_back(sentence_mean(*embeddings, d));
    x = FeatureMatrix::from_rows(rows, embeddings->dim());
  } else {
    throw Error(ErrorCode::ShapeMismatch, "bundle has no representation");
  }
  return std::visit(
      [&](const auto& m) -> Eigen::MatrixXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, NeuralClassifier>) {
          return {};
        } else {
          return m.predict_proba(x);
        }
      },
      model);
}

Eigen::MatrixXd ModelBundle::predict_proba(std::span<const std::string> texts) const {
  return predict_proba(preprocess(texts));
}

Prediction predict(const ModelBundle& bundle, std::string_view text, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > bundle.schema.size()) throw Error(ErrorCode::KTooLarge, "k exceeds the number of classes");
  const auto start = std::chrono::steady_clock::now();
  Prediction p;
  p.model_id = bundle.model_id;
  const std::vector<TokenSequence> docs = {run_pipeline(bundle.pipeline, text)};
  Eigen::VectorXd proba;
  if (docs.front().empty()) {
    p.degraded = true;
    proba = bundle.class_priors;
  } else {
    proba = bundle.predict_proba(docs).row(0).transpose();
  }
  for (const auto& s : rank_topk(proba, k)) {
    const auto& area = bundle.schema.at(s.id);
    p.labels.push_back({area.code, area.display_name, s.score});
  }
  p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return p;
}

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Eigen::MatrixXd row_of(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json tree_to_json(const DecisionTree& t) {
  json j;
  std::vector<int> feature, left, right, leaf;
  std::vector<double> threshold;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    leaf.push_back(n.leaf);
  }
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["leaf"] = leaf;
  j["outputs"] = t.leaf_values.rows();
  std::vector<double> values(t.leaf_values.data(), t.leaf_values.data() + t.leaf_values.size());
  j["leaf_values"] = values;  // column-major
  return j;
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto leaf = j.at("leaf").get<std::vector<int>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || leaf.size() != n || n == 0) {
    throw Error(ErrorCode::MalformedFile, "inconsistent tree arrays");
  }
  const auto values = j.at("leaf_values").get<std::vector<double>>();
  const auto outputs = j.at("outputs").get<Eigen::Index>();
  if (outputs <= 0 || values.size() % static_cast<std::size_t>(outputs) != 0) throw Error(ErrorCode::MalformedFile, "bad leaf values");
  const auto leaves = static_cast<Eigen::Index>(values.size()) / outputs;
  t.leaf_values = Eigen::Map<const Eigen::MatrixXd>(values.data(), outputs, leaves);
  for (std::size_t i = 0; i < n; ++i) {
    const auto bad = [&](int idx, long limit) { return idx < 0 || idx >= limit; };
    if (feature[i] >= 0 ? bad(left[i], static_cast<long>(n)) || bad(right[i], static_cast<long>(n))
                        : bad(leaf[i], static_cast<long>(leaves))) {
      throw Error(ErrorCode::MalformedFile, "tree node index out of range");
    }
    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], leaf[i]});
  }
  return t;
}

const char* kind_name(LinearKind k) { return k == LinearKind::Logistic ? "logistic" : "linear_svm"; }

}  // namespace

void save_bundle(ModelBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> members;
  json manifest;
  manifest["format_version"] = kBundleFormatVersion;
  manifest["feature"] = bundle.feature;
  manifest["classifier"] = bundle.classifier;
  manifest["pipeline"] = {{"mode", std::string(to_string(bundle.pipeline.mode))},
                          {"regex_version", kRegexVersion},
                          {"url_pattern", std::string(kUrlPattern)},
                          {"email_pattern", std::string(kEmailPattern)}};
  json schema = json::array();
  for (const auto& a : bundle.schema.areas()) schema.push_back({{"code", a.code}, {"name", a.display_name}});
  manifest["schema"] = schema;
  manifest["info"] = bundle.info;

  if (bundle.pipeline.lexicon) {
    fs::create_directories(dir / "lexicon");
    bundle.pipeline.lexicon->save(dir / "lexicon");
    members.insert(members.end(), {"lexicon/lemmas.tsv", "lexicon/pos.tsv", "lexicon/names.tsv"});
  }

  save_tensor(dir / "priors.tensor", bundle.class_priors.transpose());
  members.push_back("priors.tensor");

  if (bundle.tfidf) {
    const auto& t = *bundle.tfidf;
    write_lines(dir / "tfidf_vocab.txt", t.vocabulary);
    save_tensor(dir / "tfidf_idf.tensor", row_of(t.idf));
    std::vector<double> df(t.doc_freq.begin(), t.doc_freq.end());
    save_tensor(dir / "tfidf_df.tensor", row_of(df));
    members.insert(members.end(), {"tfidf_vocab.txt", "tfidf_idf.tensor", "tfidf_df.tensor"});
    manifest["tfidf"] = {{"n_docs", t.n_docs}, {"max_ngram", t.max_ngram}, {"pipeline_mode", std::string(to_string(t.pipeline_mode))}};
  }
  if (bundle.embeddings) {
    const auto& e = *bundle.embeddings;
    write_lines(dir / "embedding_words.txt", e.words());
    save_tensor(dir / "embedding_vectors.tensor", e.vectors());
    members.insert(members.end(), {"embedding_words.txt", "embedding_vectors.tensor"});
    const auto& m = e.metadata();
    manifest["embeddings"] = {{"architecture", std::string(to_string(m.architecture))},
                              {"window", m.window},
                              {"min_count", m.min_count},
                              {"dim", m.dim}};
  }

  json model;
  if (const auto* lin = std::get_if<LinearModel>(&bundle.model)) {
    model["kind"] = kind_name(lin->kind);
    save_tensor(dir / "linear_weights.tensor", lin->weights);
    save_tensor(dir / "linear_bias.tensor", lin->bias.transpose());
    members.insert(members.end(), {"linear_weights.tensor", "linear_bias.tensor"});
  } else if (const auto* forest = std::get_if<ForestModel>(&bundle.model)) {
    model["kind"] = "forest";
    json trees = json::array();
    for (const auto& t : forest->trees) trees.push_back(tree_to_json(t));
    write_text(dir / "trees.json", json{{"num_classes", forest->num_classes}, {"trees", trees}}.dump());
    members.push_back("trees.json");
  } else if (const auto* gbm = std::get_if<GbmModel>(&bundle.model)) {
    model["kind"] = "gbm";
    json rounds = json::array();
    for (const auto& round : gbm->rounds) {
      json r = json::array();
      for (const auto& t : round) r.push_back(tree_to_json(t));
      rounds.push_back(r);
    }
    std::vector<double> init(gbm->init_logits.data(), gbm->init_logits.data() + gbm->init_logits.size());
    write_text(dir / "trees.json", json{{"init_logits", init}, {"learning_rate", gbm->learning_rate}, {"rounds", rounds}}.dump());
    members.push_back("trees.json");
  } else {
    const auto& net = std::get<NeuralClassifier>(bundle.model);
    model = {{"kind", std::string(to_string(net.spec.kind))},
             {"hidden", net.spec.hidden},
             {"filters", net.spec.filters},
             {"widths", net.spec.widths},
             {"dropout", net.spec.dropout},
             {"num_classes", net.spec.num_classes},
             {"tensors", net.params.names}};
    for (std::size_t i = 0; i < net.params.names.size(); ++i) {
      const std::string name = "net_" + net.params.names[i] + ".tensor";
      save_tensor(dir / name, net.params.tensors[i], TensorDtype::F32);
      members.push_back(name);
    }
  }
  manifest["model"] = model;

  json files = json::object();
  for (const auto& m : members) files[m] = sha256_file(dir / m);
  manifest["files"] = files;
  bundle.model_id = sha256_hex(json{{"format_version", kBundleFormatVersion}, {"files", files}}.dump()).substr(0, 16);
  manifest["model_id"] = bundle.model_id;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, "manifest.json: " + std::string(e.what()));
  }
  try {
    if (!manifest.contains("format_version") || !manifest["format_version"].is_number_integer()) {
      throw Error(ErrorCode::MalformedFile, "manifest.json lacks format_version");
    }
    const int version = manifest["format_version"].get<int>();
    if (version != kBundleFormatVersion) {
      throw Error(ErrorCode::VersionUnsupported, "bundle format_version " + std::to_string(version) + " is not supported");
    }
    const json& files = manifest.at("files");
    for (const auto& [name, hash] : files.items()) {
      if (name.find("..") != std::string::npos || fs::path(name).is_absolute()) {
        throw Error(ErrorCode::MalformedFile, "member path escapes the bundle: " + name);
      }
      if (!fs::exists(dir / name)) throw Error(ErrorCode::HashMismatch, "missing member file " + name);
      if (sha256_file(dir / name) != hash.get<std::string>()) throw Error(ErrorCode::HashMismatch, "member file " + name + " was modified");
    }
    const std::string model_id =
        sha256_hex(json{{"format_version", kBundleFormatVersion}, {"files", files}}.dump()).substr(0, 16);
    if (manifest.value("model_id", "") != model_id) throw Error(ErrorCode::HashMismatch, "manifest model_id does not match its files");
    auto member = [&](const std::string& name) {
      if (!files.contains(name)) throw Error(ErrorCode::MalformedFile, "manifest does not list " + name);
      return dir / name;
    };

    ModelBundle b;
    b.model_id = model_id;
    b.feature = manifest.at("feature").get<std::string>();
    b.classifier = manifest.at("classifier").get<std::string>();
    b.info = manifest.value("info", json::object());
    const json& pipeline = manifest.at("pipeline");
    if (pipeline.at("regex_version").get<int>() != kRegexVersion) {
      throw Error(ErrorCode::VersionUnsupported, "bundle was built with different normalization patterns");
    }
    std::vector<LawArea> areas;
    for (const auto& a : manifest.at("schema")) areas.push_back({a.at("code").get<std::string>(), a.at("name").get<std::string>()});
    b.schema = LabelSchema(std::move(areas));
    b.pipeline.mode = parse_pipeline_mode(pipeline.at("mode").get<std::string>());
    if (b.pipeline.mode == PipelineMode::Complete) {
      b.pipeline.lexicon = load_lexicon(member("lexicon/lemmas.tsv"), member("lexicon/pos.tsv"), member("lexicon/names.tsv"));
    }
    b.class_priors = load_tensor(member("priors.tensor")).transpose();
    const auto c = static_cast<Eigen::Index>(b.schema.size());
    if (b.class_priors.size() != c) throw Error(ErrorCode::ShapeMismatch, "priors do not match the schema");

    if (manifest.contains("tfidf")) {
      TfidfModel t;
      t.vocabulary = read_lines(member("tfidf_vocab.txt"));
      const Eigen::MatrixXd idf = load_tensor(member("tfidf_idf.tensor"));
      const Eigen::MatrixXd df = load_tensor(member("tfidf_df.tensor"));
      const auto v = static_cast<Eigen::Index>(t.vocabulary.size());
      if (idf.size() != v || df.size() != v) throw Error(ErrorCode::ShapeMismatch, "tf-idf arrays differ from the vocabulary");
      t.idf.assign(idf.data(), idf.data() + v);
      for (Eigen::Index i = 0; i < v; ++i) t.doc_freq.push_back(static_cast<std::size_t>(df(i)));
      t.n_docs = manifest["tfidf"].at("n_docs").get<std::size_t>();
      t.max_ngram = manifest["tfidf"].at("max_ngram").get<int>();
      t.pipeline_mode = parse_pipeline_mode(manifest["tfidf"].at("pipeline_mode").get<std::string>());
      t.reindex();
      b.tfidf = std::move(t);
    }
    if (manifest.contains("embeddings")) {
      const json& e = manifest["embeddings"];
      EmbeddingMetadata meta;
      meta.architecture = parse_architecture(e.at("architecture").get<std::string>());
      meta.window = e.at("window").get<int>();
      meta.min_count = e.at("min_count").get<int>();
      meta.dim = e.at("dim").get<int>();
      b.embeddings = EmbeddingTable(read_lines(member("embedding_words.txt")), load_tensor(member("embedding_vectors.tensor")), meta);
    }

    const json& model = manifest.at("model");
    const std::string kind = model.at("kind").get<std::string>();
    if (kind == "logistic" || kind == "linear_svm") {
      LinearModel lin;
      lin.kind = kind == "logistic" ? LinearKind::Logistic : LinearKind::LinearSvm;
      lin.weights = load_tensor(member("linear_weights.tensor"));
      lin.bias = load_tensor(member("linear_bias.tensor")).transpose();
      if (lin.weights.rows() != c || lin.bias.size() != c) throw Error(ErrorCode::ShapeMismatch, "linear model does not match the schema");
      b.model = std::move(lin);
    } else if (kind == "forest" || kind == "gbm") {
      const json trees = json::parse(read_text(member("trees.json")));
      if (kind == "forest") {
        ForestModel f;
        f.num_classes = trees.at("num_classes").get<int>();
        for (const auto& t : trees.at("trees")) f.trees.push_back(tree_from_json(t));
        b.model = std::move(f);
      } else {
        GbmModel g;
        const auto init = trees.at("init_logits").get<std::vector<double>>();
        g.init_logits = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
        g.learning_rate = trees.at("learning_rate").get<double>();
        for (const auto& round : trees.at("rounds")) {
          std::vector<DecisionTree> r;
          for (const auto& t : round) r.push_back(tree_from_json(t));
          g.rounds.push_back(std::move(r));
        }
        b.model = std::move(g);
      }
    } else {
      if (!b.embeddings) throw Error(ErrorCode::MalformedFile, "network bundle without embeddings");
      NeuralClassifier net;
      net.spec.kind = parse_net_kind(kind);
      net.spec.embedding = std::make_shared<const Eigen::MatrixXd>(embedding_lookup<double>(*b.embeddings));
      net.spec.hidden = model.at("hidden").get<int>();
      net.spec.filters = model.at("filters").get<int>();
      net.spec.widths = model.at("widths").get<std::vector<int>>();
      net.spec.dropout = model.at("dropout").get<double>();
      net.spec.num_classes = model.at("num_classes").get<int>();
      for (const auto& name : model.at("tensors")) {
        net.params.names.push_back(name.get<std::string>());
        net.params.tensors.push_back(load_tensor(member("net_" + name.get<std::string>() + ".tensor")));
      }
      forward(net.spec, net.params, pad_sequence({}));  // validates shapes
      b.model = std::move(net);
    }
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, "manifest.json: " + std::string(e.what()));
  }
}

}  // namespace lawarea
