#include "lawarea/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lawarea/error.hpp"

namespace lawarea {

std::vector<std::string> extract_ngrams(const TokenSequence& doc, int max_ngram) {
  const auto& t = doc.tokens;
  std::vector<std::string> out(t.begin(), t.end());
  if (max_ngram >= 2) {
    for (std::size_t i = 1; i < t.size(); ++i) out.push_back(t[i - 1] + " " + t[i]);
  }
  return out;
}

void TfidfModel::reindex() {
  index.clear();
  index.reserve(vocabulary.size());
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index.emplace(vocabulary[i], static_cast<int>(i));
}

TfidfModel fit_tfidf(const std::vector<TokenSequence>& corpus, const TfidfOptions& options, PipelineMode mode) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyData, "fit_tfidf on an empty corpus");
  struct Stats {
    std::size_t count = 0;
    std::size_t docs = 0;
    std::size_t last_doc = static_cast<std::size_t>(-1);
  };
  std::unordered_map<std::string, Stats> stats;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (auto& gram : extract_ngrams(corpus[d], options.max_ngram)) {
      auto& s = stats[std::move(gram)];
      ++s.count;
      if (s.last_doc != d) {
        ++s.docs;
        s.last_doc = d;
      }
    }
  }

  const double n = static_cast<double>(corpus.size());
  TfidfModel model;
  model.n_docs = corpus.size();
  model.max_ngram = options.max_ngram;
  model.pipeline_mode = mode;
  for (const auto& [gram, s] : stats) {
    if (s.count > options.min_count && static_cast<double>(s.docs) < options.max_doc_frac * n) {
      model.vocabulary.push_back(gram);
    }
  }
  if (model.vocabulary.empty()) throw Error(ErrorCode::EmptyVocabulary, "no n-gram passes the TF-IDF filters");
  std::sort(model.vocabulary.begin(), model.vocabulary.end());
  model.doc_freq.reserve(model.vocabulary.size());
  model.idf.reserve(model.vocabulary.size());
  for (const auto& gram : model.vocabulary) {
    const auto df = stats.at(gram).docs;
    model.doc_freq.push_back(df);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
  }
  model.reindex();
  return model;
}

SparseVector transform_tfidf(const TfidfModel& model, const TokenSequence& doc) {
  std::map<int, double> counts;
  for (const auto& gram : extract_ngrams(doc, model.max_ngram)) {
    if (auto it = model.index.find(gram); it != model.index.end()) counts[it->second] += 1.0;
  }
  SparseVector v(model.dimension());
  v.reserve(static_cast<Eigen::Index>(counts.size()));
  double norm2 = 0.0;
  for (auto& [col, c] : counts) {
    c *= model.idf[static_cast<std::size_t>(col)];
    norm2 += c * c;
  }
  const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
  for (const auto& [col, c] : counts) v.insertBack(col) = c * inv;
  return v;
}

}  // namespace lawarea
