#include "lawarea/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "lawarea/error.hpp"
#include "lawarea/random.hpp"
#include "lawarea/sgns.hpp"

namespace lawarea {

std::string_view to_string(Architecture a) noexcept {
  switch (a) {
    case Architecture::CBoW: return "cbow";
    case Architecture::SkipGram: return "skipgram";
    case Architecture::External: return "external";
  }
  return "external";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "cbow") return Architecture::CBoW;
  if (name == "skipgram") return Architecture::SkipGram;
  if (name == "external") return Architecture::External;
  throw Error(ErrorCode::InvalidArgument, "unknown architecture '" + std::string(name) + "'");
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, Eigen::MatrixXd vectors, EmbeddingMetadata metadata)
    : words_(std::move(words)), vectors_(std::move(vectors)), metadata_(metadata) {
  if (static_cast<Eigen::Index>(words_.size()) != vectors_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "word count does not match vector rows");
  }
  metadata_.dim = static_cast<int>(vectors_.cols());
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<Eigen::Index>(i)).second) throw Error(ErrorCode::DuplicateWord, words_[i]);
  }
  if (!vectors_.allFinite()) throw Error(ErrorCode::InvalidArgument, "embedding vectors must be finite");
}

std::optional<Eigen::Index> EmbeddingTable::find(const std::string& word) const {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  return std::nullopt;
}

void W2VConfig::validate() const {
  if (architecture == Architecture::External) throw Error(ErrorCode::InvalidConfig, "cannot train an external table");
  if (window < 1) throw Error(ErrorCode::InvalidConfig, "window must be >= 1");
  if (dim < 1) throw Error(ErrorCode::InvalidConfig, "dim must be >= 1");
  if (negatives < 1) throw Error(ErrorCode::InvalidConfig, "negatives must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (min_count < 0) throw Error(ErrorCode::InvalidConfig, "min_count must be >= 0");
  if (!(initial_lr > 0)) throw Error(ErrorCode::InvalidConfig, "initial_lr must be > 0");
  if (threads < 1) throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
}

W2VConfig W2VConfig::defaults_for(Architecture a) {
  W2VConfig cfg;
  cfg.architecture = a;
  cfg.initial_lr = a == Architecture::CBoW ? 0.05 : 0.025;
  return cfg;
}

namespace {

struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::size_t> counts;
  std::unordered_map<std::string, int> index;
};

Vocabulary build_vocabulary(const std::vector<TokenSequence>& corpus, int min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= static_cast<std::size_t>(min_count)) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  for (auto& [w, c] : kept) {
    v.index.emplace(w, static_cast<int>(v.words.size()));
    v.words.push_back(w);
    v.counts.push_back(c);
  }
  return v;
}

// Draws word ids from the unigram^(3/4) distribution.
class NoiseSampler {
 public:
  explicit NoiseSampler(const std::vector<std::size_t>& counts) {
    cumulative_.reserve(counts.size());
    double total = 0;
    for (auto c : counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(total);
    }
  }

  int draw(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<int>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

struct Model {
  Eigen::MatrixXd input;   // dim x V, one column per word
  Eigen::MatrixXd output;  // dim x V
};

class Trainer {
 public:
  Trainer(const W2VConfig& cfg, const Vocabulary& vocab, std::vector<std::vector<int>> sentences)
      : cfg_(cfg), vocab_(vocab), sentences_(std::move(sentences)), noise_(vocab.counts) {
    for (const auto& s : sentences_) total_tokens_ += s.size();
    for (auto c : vocab.counts) corpus_words_ += c;
  }

  /// Runs every epoch over this trainer's sentences, updating `m` in place.
  void train(Model& m, Word2VecTrace* trace) {
    const double total_work =
        static_cast<double>(cfg_.epochs) * static_cast<double>(std::max<std::size_t>(1, total_tokens_));
    std::size_t processed = 0;
    Rng rng(derive_seed(cfg_.seed, 1));
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      double loss_sum = 0;
      std::size_t pairs = 0;
      for (const auto& sentence : sentences_) {
        const double lr = std::max(cfg_.min_lr, cfg_.initial_lr * (1.0 - static_cast<double>(processed) / total_work));
        processed += sentence.size();
        train_sentence(m, subsample(sentence, rng), lr, rng, loss_sum, pairs);
      }
      if (trace) trace->epoch_loss.push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
    }
  }

 private:
  std::vector<int> subsample(const std::vector<int>& sentence, Rng& rng) const {
    if (cfg_.sample <= 0) return sentence;
    std::vector<int> kept;
    const double threshold = cfg_.sample * static_cast<double>(corpus_words_);
    for (int w : sentence) {
      const double f = static_cast<double>(vocab_.counts[static_cast<std::size_t>(w)]);
      const double keep = (std::sqrt(f / threshold) + 1.0) * threshold / f;
      if (keep >= 1.0 || uniform01(rng) < keep) kept.push_back(w);
    }
    return kept;
  }

  void draw_negatives(int positive, Rng& rng) {
    negative_ids_.clear();
    for (int k = 0; k < cfg_.negatives; ++k) {
      const int w = noise_.draw(rng);
      if (w != positive) negative_ids_.push_back(w);
    }
  }

  // One gradient step on the negative-sampling objective; `hidden` is the
  // input-side vector (center word for skip-gram, context mean for CBoW).
  double step(Model& m, const Eigen::VectorXd& hidden, int positive, double lr, Eigen::VectorXd& grad_hidden) {
    const auto n_neg = static_cast<Eigen::Index>(negative_ids_.size());
    negatives_.resize(cfg_.dim, n_neg);
    for (Eigen::Index k = 0; k < n_neg; ++k) negatives_.col(k) = m.output.col(negative_ids_[static_cast<std::size_t>(k)]);
    grad_context_.resize(cfg_.dim);
    grad_negatives_.resize(cfg_.dim, n_neg);
    const double l = sgns::gradient(hidden, m.output.col(positive), negatives_, grad_hidden, grad_context_, grad_negatives_);
    m.output.col(positive) -= lr * grad_context_;
    for (Eigen::Index k = 0; k < n_neg; ++k) {
      m.output.col(negative_ids_[static_cast<std::size_t>(k)]) -= lr * grad_negatives_.col(k);
    }
    return l;
  }

  void train_sentence(Model& m, const std::vector<int>& sentence, double lr, Rng& rng, double& loss_sum,
                      std::size_t& pairs) {
    const auto n = static_cast<std::ptrdiff_t>(sentence.size());
    Eigen::VectorXd hidden(cfg_.dim);
    Eigen::VectorXd grad_hidden(cfg_.dim);
    for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
      const auto reach = static_cast<std::ptrdiff_t>(1 + uniform_index(rng, static_cast<std::uint64_t>(cfg_.window)));
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - reach);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, pos + reach);
      const int center = sentence[static_cast<std::size_t>(pos)];
      if (cfg_.architecture == Architecture::SkipGram) {
        for (std::ptrdiff_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          const int context = sentence[static_cast<std::size_t>(c)];
          draw_negatives(context, rng);
          hidden = m.input.col(center);
          loss_sum += step(m, hidden, context, lr, grad_hidden);
          m.input.col(center) -= lr * grad_hidden;
          ++pairs;
        }
      } else {
        hidden.setZero();
        int count = 0;
        for (std::ptrdiff_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          hidden += m.input.col(sentence[static_cast<std::size_t>(c)]);
          ++count;
        }
        if (count == 0) continue;
        hidden /= count;
        draw_negatives(center, rng);
        loss_sum += step(m, hidden, center, lr, grad_hidden);
        grad_hidden /= count;
        for (std::ptrdiff_t c = lo; c <= hi; ++c) {
          if (c != pos) m.input.col(sentence[static_cast<std::size_t>(c)]) -= lr * grad_hidden;
        }
        ++pairs;
      }
    }
  }

  const W2VConfig& cfg_;
  const Vocabulary& vocab_;
  std::vector<std::vector<int>> sentences_;
  NoiseSampler noise_;
  std::size_t total_tokens_ = 0;
  std::size_t corpus_words_ = 0;
  std::vector<int> negative_ids_;
  Eigen::MatrixXd negatives_;
  Eigen::VectorXd grad_context_;
  Eigen::MatrixXd grad_negatives_;
};

}  // namespace

EmbeddingTable train_word2vec(const std::vector<TokenSequence>& corpus, const W2VConfig& config,
                              Word2VecTrace* trace) {
  config.validate();
  const Vocabulary vocab = build_vocabulary(corpus, config.min_count);
  if (vocab.words.empty()) throw Error(ErrorCode::EmptyVocabulary, "no word reaches min_count");

  std::vector<std::vector<int>> sentences;
  sentences.reserve(corpus.size());
  for (const auto& doc : corpus) {
    std::vector<int> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens) {
      if (auto it = vocab.index.find(t); it != vocab.index.end()) ids.push_back(it->second);
    }
    if (ids.size() > 1) sentences.push_back(std::move(ids));
  }

  const int d = config.dim;
  const auto V = static_cast<Eigen::Index>(vocab.words.size());
  Model m{Eigen::MatrixXd(d, V), Eigen::MatrixXd::Zero(d, V)};
  Rng init_rng(derive_seed(config.seed, 0));
  for (Eigen::Index j = 0; j < V; ++j) {
    for (int i = 0; i < d; ++i) m.input(i, j) = (uniform01(init_rng) - 0.5) / d;
  }

  if (config.threads == 1) {
    Trainer(config, vocab, std::move(sentences)).train(m, trace);
  } else {
    // Hogwild: shards update the shared matrices without locks; each shard keeps its own scratch state.
    const auto n_threads = static_cast<std::size_t>(config.threads);
    std::vector<std::vector<std::vector<int>>> shards(n_threads);
    for (std::size_t s = 0; s < sentences.size(); ++s) shards[s % n_threads].push_back(std::move(sentences[s]));
    std::vector<W2VConfig> configs(n_threads, config);
    std::vector<Word2VecTrace> traces(n_threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      configs[t].seed = derive_seed(config.seed, 100 + t);
      pool.emplace_back([&, t] { Trainer(configs[t], vocab, std::move(shards[t])).train(m, &traces[t]); });
    }
    for (auto& th : pool) th.join();
    if (trace) {
      for (int e = 0; e < config.epochs; ++e) {
        double sum = 0;
        for (const auto& tr : traces) sum += tr.epoch_loss[static_cast<std::size_t>(e)];
        trace->epoch_loss.push_back(sum / static_cast<double>(n_threads));
      }
    }
  }

  EmbeddingMetadata meta{config.architecture, config.window, config.min_count, config.dim};
  return EmbeddingTable(vocab.words, m.input.transpose(), meta);
}

EmbeddingTable read_embeddings_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::HeaderMismatch, "missing header line");
  long long declared_rows = -1;
  long long dim = -1;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> declared_rows >> dim) || (header >> extra) || declared_rows < 0 || dim < 1) {
      throw Error(ErrorCode::HeaderMismatch, "header must be '<vocab_size> <dim>', got '" + line + "'");
    }
  }
  std::vector<std::string> words;
  std::vector<double> values;
  words.reserve(static_cast<std::size_t>(declared_rows));
  values.reserve(static_cast<std::size_t>(declared_rows * dim));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = line.find(' ');
    if (pos == std::string::npos || pos == 0) {
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(line_no));
    }
    words.push_back(line.substr(0, pos));
    long long n = 0;
    const char* p = line.data() + pos;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(line_no) + ": bad number");
      values.push_back(v);
      ++n;
      p = next;
    }
    if (n != dim) {
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(line_no) + " has " + std::to_string(n) +
                                                    " values, expected " + std::to_string(dim));
    }
  }
  if (static_cast<long long>(words.size()) != declared_rows) {
    throw Error(ErrorCode::HeaderMismatch, "header declares " + std::to_string(declared_rows) + " rows, file has " +
                                               std::to_string(words.size()));
  }
  Eigen::MatrixXd vectors =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          values.data(), declared_rows, dim);
  return EmbeddingTable(std::move(words), std::move(vectors), {Architecture::External, 0, 0, static_cast<int>(dim)});
}

EmbeddingTable load_embeddings_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_embeddings_text(in);
}

void write_embeddings_text(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    out << table.words()[static_cast<std::size_t>(i)];
    for (int j = 0; j < table.dim(); ++j) {
      std::snprintf(buf, sizeof buf, " %.9g", table.vectors()(i, j));
      out << buf;
    }
    out << '\n';
  }
}

void save_embeddings_text(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_embeddings_text(out, table);
}

Eigen::VectorXd sentence_mean(const EmbeddingTable& table, const TokenSequence& doc) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
  int known = 0;
  for (const auto& t : doc.tokens) {
    if (auto row = table.find(t)) {
      sum += table.row(*row).transpose();
      ++known;
    }
  }
  if (known > 0) sum /= known;
  return sum;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingTable& table, const std::string& word,
                                                              std::size_t k) {
  const auto query = table.find(word);
  if (!query) throw Error(ErrorCode::UnknownWord, word);
  if (k >= static_cast<std::size_t>(table.size())) {
    throw Error(ErrorCode::KTooLarge, "k must be smaller than the vocabulary size");
  }
  const Eigen::VectorXd norms = table.vectors().rowwise().norm();
  const Eigen::VectorXd q = table.row(*query).transpose();
  const Eigen::VectorXd dots = table.vectors() * q;
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(static_cast<std::size_t>(table.size()));
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    if (i == *query) continue;
    const double denom = norms(i) * norms(*query);
    ranked.emplace_back(table.words()[static_cast<std::size_t>(i)], denom > 0 ? dots(i) / denom : 0.0);
  }
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  ranked.resize(k);
  return ranked;
}

}  // namespace lawarea
