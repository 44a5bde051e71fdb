#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lawarea/corpus.hpp"
#include "lawarea/embeddings.hpp"
#include "lawarea/features.hpp"
#include "lawarea/linear.hpp"
#include "lawarea/neural.hpp"
#include "lawarea/preprocess.hpp"
#include "lawarea/trees.hpp"

namespace lawarea {

inline constexpr int kBundleFormatVersion = 1;

/// Inference copy of a trained network; weights were trained in 32-bit and
/// widened exactly, so inference is 64-bit.
struct NeuralClassifier {
  NetSpec<double> spec;
  NetParams<double> params;
};

using Classifier = std::variant<LinearModel, ForestModel, GbmModel, NeuralClassifier>;

enum class Representation { Tfidf, SentenceMean, Sequence };

/// Everything needed to go from raw text to class probabilities.
struct ModelBundle {
  LabelSchema schema = LabelSchema::canonical();
  PipelineConfig pipeline;
  std::string feature;  // tfidf-small, tfidf-large, w2v-cbow, w2v-skipgram, external
  std::string classifier;  // logreg, svm, forest, gbm, cnn, lstm, gru, mean_pool
  std::optional<TfidfModel> tfidf;
  std::optional<EmbeddingTable> embeddings;
  Classifier model;
  Eigen::VectorXd class_priors;  // training-label frequencies
  nlohmann::json info = nlohmann::json::object();  // training metadata
  std::string model_id;  // content hash, assigned by save_bundle and load_bundle

  Representation representation() const;
  std::vector<TokenSequence> preprocess(std::span<const std::string> texts) const;
  /// n x C class probabilities; rows sum to 1.
  Eigen::MatrixXd predict_proba(const std::vector<TokenSequence>& docs) const;
  Eigen::MatrixXd predict_proba(std::span<const std::string> texts) const;
};

/// Writes manifest.json plus member files into `dir` (created if needed) and
/// sets bundle.model_id.
void save_bundle(ModelBundle& bundle, const std::filesystem::path& dir);
/// Throws Error(VersionUnsupported) for an unknown format_version and
/// Error(HashMismatch) when a member file differs from its manifest hash.
ModelBundle load_bundle(const std::filesystem::path& dir);

struct RankedLabel {
  std::string code;
  std::string display_name;
  double confidence;
};

struct Prediction {
  std::vector<RankedLabel> labels;  // descending confidence, ties by schema order
  std::string model_id;
  bool degraded = false;  // preprocessing left no tokens; ranking is the class prior
  double latency_ms = 0;
};

/// Runs the bundle's own pipeline. Throws Error(KTooLarge) when k exceeds the
/// schema size and Error(InvalidArgument) when k is 0.
Prediction predict(const ModelBundle& bundle, std::string_view text, std::size_t k = 5);

}  // namespace lawarea
