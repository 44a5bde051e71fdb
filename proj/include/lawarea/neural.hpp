#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lawarea/corpus.hpp"
#include "lawarea/embeddings.hpp"
#include "lawarea/random.hpp"

namespace lawarea {

inline constexpr int kSequenceLength = 300;
inline constexpr int kPadId = 0;
inline constexpr int kOovId = 1;

struct PaddedSequence {
  std::array<int, kSequenceLength> token_ids{};  // kPadId everywhere a token is absent

  bool operator==(const PaddedSequence&) const = default;
};

/// Right-pads with kPadId; longer inputs keep their first kSequenceLength ids.
PaddedSequence pad_sequence(std::span<const int> ids);

/// Maps words to embedding ids: row i of the table becomes id i + 2; unknown
/// words map to kOovId.
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  explicit SequenceEncoder(const EmbeddingTable& table);

  std::vector<int> ids(const TokenSequence& doc) const;
  PaddedSequence encode(const TokenSequence& doc) const { return pad_sequence(ids(doc)); }
  int vocabulary_size() const noexcept { return static_cast<int>(index_.size()) + 2; }

 private:
  std::unordered_map<std::string, int> index_;
};

/// (|V| + 2) x d lookup with zero rows for kPadId and kOovId.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> embedding_lookup(const EmbeddingTable& table);

/// MeanPool is the dense head on the mean of the real-token embeddings.
enum class NetKind { CnnMax, Lstm, Gru, MeanPool };

std::string_view to_string(NetKind k) noexcept;
NetKind parse_net_kind(std::string_view name);

template <typename Scalar>
struct NetSpec {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  NetKind kind = NetKind::Lstm;
  std::shared_ptr<const Matrix> embedding;  // frozen
  int hidden = 32;  // LSTM / GRU units
  int filters = 32;  // per CNN width
  std::vector<int> widths = {2, 3, 4};
  double dropout = 0.0;  // applied to the head input while training
  int num_classes = 18;

  int input_dim() const { return static_cast<int>(embedding->cols()); }
  int feature_dim() const;
};

/// Trainable tensors by name. Layouts (gate blocks stacked by rows):
///   Lstm: W 4H x d, U 4H x H, b 4H x 1 in gate order input, forget, candidate, output
///   Gru:  W 3H x d, U 3H x H, b 3H x 1 in gate order update, reset, candidate
///   CnnMax: conv<w>_W filters x (w d), conv<w>_b filters x 1 per width w
///   all:  head_W C x features, head_b C x 1
template <typename Scalar>
struct NetParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  Eigen::Index scalar_count() const;
  void set_zero();
  bool all_finite() const;
};

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere; LSTM forget bias 1.
template <typename Scalar>
NetParams<Scalar> init_params(const NetSpec<Scalar>& spec, std::uint64_t seed);

/// Inference logits (no dropout). Throws Error(ShapeMismatch) when params do
/// not fit the spec or an id exceeds the embedding table.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params,
                                                 const PaddedSequence& seq);

/// Cross-entropy of `label`; gradients are accumulated into `grad` (same
/// layout as params). A null `dropout_rng` disables dropout.
template <typename Scalar>
Scalar loss_and_gradient(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params, const PaddedSequence& seq,
                         ClassId label, NetParams<Scalar>& grad, Rng* dropout_rng = nullptr);

/// Per filter: index of the max-pooled window and whether the ReLU is active.
/// Empty for non-convolutional nets.
template <typename Scalar>
std::vector<int> pooling_signature(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params,
                                   const PaddedSequence& seq);

struct LabeledSequence {
  PaddedSequence sequence;
  ClassId label;
};

struct NetTrainHyper {
  double lr = 0.005;
  int batch = 32;
  int epochs = 10;
  std::uint64_t seed = 1;
};

struct NetTrainTrace {
  std::vector<double> epoch_loss;
};

/// Adam (0.9, 0.999, 1e-8) on the mean batch cross-entropy, starting from
/// init_params(spec, hyper.seed). Throws Error(EmptyData).
template <typename Scalar>
NetParams<Scalar> train_net(const NetSpec<Scalar>& spec, std::span<const LabeledSequence> data,
                            const NetTrainHyper& hyper, NetTrainTrace* trace = nullptr);

/// n x C softmax probabilities.
template <typename Scalar>
Eigen::MatrixXd predict_proba(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params,
                              std::span<const PaddedSequence> seqs);

/// Worst |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
/// scalar parameter, using central differences. For convolutional nets a
/// parameter is skipped when either perturbation changes the pooling
/// signature. Throws Error(InvalidArgument) unless epsilon > 0.
double gradient_check(const NetSpec<double>& spec, const NetParams<double>& params, const PaddedSequence& seq,
                      ClassId label, double epsilon = 1e-5);

}  // namespace lawarea
