#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lawarea/preprocess.hpp"

namespace lawarea {

enum class Architecture { CBoW, SkipGram, External };

std::string_view to_string(Architecture a) noexcept;
Architecture parse_architecture(std::string_view name);

struct EmbeddingMetadata {
  Architecture architecture = Architecture::External;
  int window = 0;
  int min_count = 0;
  int dim = 0;
};

/// Word -> dense vector map; row i of vectors() belongs to words()[i].
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Throws Error(DuplicateWord) or Error(DimensionMismatch).
  EmbeddingTable(std::vector<std::string> words, Eigen::MatrixXd vectors, EmbeddingMetadata metadata);

  Eigen::Index size() const noexcept { return vectors_.rows(); }
  int dim() const noexcept { return static_cast<int>(vectors_.cols()); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  const EmbeddingMetadata& metadata() const noexcept { return metadata_; }

  std::optional<Eigen::Index> find(const std::string& word) const;
  auto row(Eigen::Index i) const { return vectors_.row(i); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> index_;
  Eigen::MatrixXd vectors_;
  EmbeddingMetadata metadata_;
};

struct W2VConfig {
  Architecture architecture = Architecture::SkipGram;
  int window = 5;
  int min_count = 5;
  int dim = 100;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;  // 0.05 is the usual CBoW choice
  double min_lr = 1e-4;
  double sample = 0.0;  // frequent-word subsampling threshold; 0 disables
  std::uint64_t seed = 1;
  /// 1 = deterministic reference mode. More threads share parameters without
  /// locking (Hogwild) and are not reproducible.
  int threads = 1;

  /// Throws Error(InvalidConfig).
  void validate() const;
  static W2VConfig defaults_for(Architecture a);
};

struct Word2VecTrace {
  std::vector<double> epoch_loss;  // mean negative-sampling loss per training pair
};

/// Throws Error(EmptyVocabulary) when no word reaches min_count.
EmbeddingTable train_word2vec(const std::vector<TokenSequence>& corpus, const W2VConfig& config,
                              Word2VecTrace* trace = nullptr);

/// word2vec text format: "<count> <dim>" header, then "word v1 ... vdim".
EmbeddingTable read_embeddings_text(std::istream& in);
EmbeddingTable load_embeddings_text(const std::filesystem::path& path);
/// Values printed with 9 significant digits.
void write_embeddings_text(std::ostream& out, const EmbeddingTable& table);
void save_embeddings_text(const std::filesystem::path& path, const EmbeddingTable& table);

/// Mean of in-vocabulary token vectors; zero vector when none is known.
Eigen::VectorXd sentence_mean(const EmbeddingTable& table, const TokenSequence& doc);

/// k most cosine-similar words (query excluded), ties broken lexicographically.
std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingTable& table, const std::string& word,
                                                              std::size_t k);

}  // namespace lawarea
