#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lawarea/bundle.hpp"
#include "lawarea/corpus.hpp"
#include "lawarea/embeddings.hpp"
#include "lawarea/features.hpp"
#include "lawarea/preprocess.hpp"
#include "lawarea/tuning.hpp"

namespace lawarea {

struct FitOptions {
  std::string feature = "tfidf-large";
  std::string classifier = "logreg";
  std::string sampling = "none";  // none | rus
  /// Classifier hyperparameters; unknown keys are rejected. See
  /// config/search_spaces.json for the accepted names.
  Config hyper = Config::object();
  TfidfOptions tfidf;
  W2VConfig w2v;  // architecture is taken from the feature name
  std::optional<Lexicon> lexicon;  // required by tfidf-small
  std::optional<EmbeddingTable> external_embeddings;  // required by external
  std::uint64_t seed = 1;
};

/// Preprocesses, builds the representation and trains the classifier on
/// `train` (after optional under-sampling). Throws Error(InvalidConfig) for
/// unknown names or hyperparameters and Error(LexiconMissing) when tfidf-small
/// has no lexicon.
ModelBundle fit_bundle(const Dataset& train, const FitOptions& options);

/// Trial for random_search: fits on the fold's training rows with the sampled
/// hyperparameters merged over options.hyper and predicts the validation rows.
TrialFunction make_trial(const Dataset& train, const FitOptions& options);

bool is_neural_classifier(std::string_view name) noexcept;

}  // namespace lawarea
