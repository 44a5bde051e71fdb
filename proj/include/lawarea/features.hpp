#pragma once

#include <Eigen/SparseCore>
#include <string>
#include <unordered_map>
#include <vector>

#include "lawarea/preprocess.hpp"

namespace lawarea {

/// One document as a TF-IDF row; indices strictly increasing.
using SparseVector = Eigen::SparseVector<double>;

/// Unigrams in order, then adjacent bigrams ("a b") in order.
std::vector<std::string> extract_ngrams(const TokenSequence& doc, int max_ngram = 2);

struct TfidfOptions {
  /// An n-gram is kept when its total corpus count is strictly greater than this.
  std::size_t min_count = 10;
  /// ...and its document frequency is strictly below this fraction of documents.
  /// Values above 1 disable the cap.
  double max_doc_frac = 0.9;
  int max_ngram = 2;
};

struct TfidfModel {
  std::vector<std::string> vocabulary;  // lexicographic; position = column
  std::unordered_map<std::string, int> index;
  std::vector<std::size_t> doc_freq;
  std::vector<double> idf;
  std::size_t n_docs = 0;
  int max_ngram = 2;
  PipelineMode pipeline_mode = PipelineMode::Complete;

  Eigen::Index dimension() const noexcept { return static_cast<Eigen::Index>(vocabulary.size()); }
  /// "Small" for the complete pipeline, "Large" for the simple one.
  std::string_view variant() const noexcept { return pipeline_mode == PipelineMode::Complete ? "Small" : "Large"; }

  /// Rebuilds `index` from `vocabulary`.
  void reindex();
};

/// idf(g) = ln((1 + n_docs) / (1 + df(g))) + 1. Throws Error(EmptyVocabulary)
/// when no n-gram passes the filters and Error(EmptyData) on an empty corpus.
TfidfModel fit_tfidf(const std::vector<TokenSequence>& corpus, const TfidfOptions& options = {},
                     PipelineMode mode = PipelineMode::Complete);

/// Raw count x idf per in-vocabulary n-gram, L2-normalized. Documents without
/// in-vocabulary n-grams map to the zero vector.
SparseVector transform_tfidf(const TfidfModel& model, const TokenSequence& doc);

}  // namespace lawarea
