#include "lawarea/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lawarea/error.hpp"

namespace lawarea {

PaddedSequence pad_sequence(std::span<const int> ids) {
  PaddedSequence seq;
  seq.token_ids.fill(kPadId);
  const std::size_t n = std::min<std::size_t>(ids.size(), kSequenceLength);
  std::copy_n(ids.begin(), n, seq.token_ids.begin());
  return seq;
}

SequenceEncoder::SequenceEncoder(const EmbeddingTable& table) {
  for (std::size_t i = 0; i < table.words().size(); ++i) index_.emplace(table.words()[i], static_cast<int>(i) + 2);
}

std::vector<int> SequenceEncoder::ids(const TokenSequence& doc) const {
  std::vector<int> out;
  out.reserve(doc.tokens.size());
  for (const auto& token : doc.tokens) {
    const auto it = index_.find(token);
    out.push_back(it == index_.end() ? kOovId : it->second);
  }
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> embedding_lookup(const EmbeddingTable& table) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(table.size() + 2, table.dim());
  m.bottomRows(table.size()) = table.vectors().template cast<Scalar>();
  return m;
}

std::string_view to_string(NetKind k) noexcept {
  switch (k) {
    case NetKind::CnnMax: return "cnn_max";
    case NetKind::Lstm: return "lstm";
    case NetKind::Gru: return "gru";
    case NetKind::MeanPool: return "mean_pool";
  }
  return "?";
}

NetKind parse_net_kind(std::string_view name) {
  for (NetKind k : {NetKind::CnnMax, NetKind::Lstm, NetKind::Gru, NetKind::MeanPool}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown network kind: " + std::string(name));
}

template <typename Scalar>
int NetSpec<Scalar>::feature_dim() const {
  switch (kind) {
    case NetKind::Lstm:
    case NetKind::Gru: return hidden;
    case NetKind::CnnMax: return filters * static_cast<int>(widths.size());
    case NetKind::MeanPool: return input_dim();
  }
  return 0;
}

template <typename Scalar>
typename NetParams<Scalar>::Matrix& NetParams<Scalar>::at(std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorCode::ShapeMismatch, "missing tensor " + std::string(name));
  return tensors[static_cast<std::size_t>(it - names.begin())];
}

template <typename Scalar>
const typename NetParams<Scalar>::Matrix& NetParams<Scalar>::at(std::string_view name) const {
  return const_cast<NetParams*>(this)->at(name);
}

template <typename Scalar>
Eigen::Index NetParams<Scalar>::scalar_count() const {
  Eigen::Index n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

template <typename Scalar>
void NetParams<Scalar>::set_zero() {
  for (auto& t : tensors) t.setZero();
}

template <typename Scalar>
bool NetParams<Scalar>::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const Matrix& t) { return t.allFinite(); });
}

namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct TensorShape {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index fan_in;
};

template <typename S>
std::vector<TensorShape> layout(const NetSpec<S>& spec) {
  const Eigen::Index d = spec.input_dim();
  const Eigen::Index h = spec.hidden;
  std::vector<TensorShape> shapes;
  switch (spec.kind) {
    case NetKind::Lstm:
    case NetKind::Gru: {
      const Eigen::Index gates = spec.kind == NetKind::Lstm ? 4 : 3;
      shapes.push_back({"W", gates * h, d, d});
      shapes.push_back({"U", gates * h, h, h});
      shapes.push_back({"b", gates * h, 1, h});
      break;
    }
    case NetKind::CnnMax:
      for (int w : spec.widths) {
        const std::string prefix = "conv" + std::to_string(w);
        shapes.push_back({prefix + "_W", spec.filters, w * d, w * d});
        shapes.push_back({prefix + "_b", spec.filters, 1, w * d});
      }
      break;
    case NetKind::MeanPool: break;
  }
  shapes.push_back({"head_W", spec.num_classes, spec.feature_dim(), spec.feature_dim()});
  shapes.push_back({"head_b", spec.num_classes, 1, spec.feature_dim()});
  return shapes;
}

template <typename S>
void validate_spec(const NetSpec<S>& spec) {
  if (!spec.embedding || spec.embedding->rows() < 2 || spec.embedding->cols() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "embedding lookup needs pad and oov rows");
  }
  if (spec.num_classes < 2) throw Error(ErrorCode::InvalidConfig, "need at least two classes");
  if ((spec.kind == NetKind::Lstm || spec.kind == NetKind::Gru) && spec.hidden < 1) {
    throw Error(ErrorCode::InvalidConfig, "hidden units must be >= 1");
  }
  if (spec.kind == NetKind::CnnMax) {
    if (spec.filters < 1 || spec.widths.empty()) throw Error(ErrorCode::InvalidConfig, "CNN needs filters and widths");
    for (int w : spec.widths) {
      if (w < 1 || w > kSequenceLength) throw Error(ErrorCode::InvalidConfig, "invalid convolution width");
    }
  }
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout must be in [0, 1)");
}

template <typename S>
void check_shapes(const NetSpec<S>& spec, const NetParams<S>& params) {
  validate_spec(spec);
  const auto shapes = layout(spec);
  if (shapes.size() != params.tensors.size() || params.names.size() != params.tensors.size()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter count does not match the network");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& t = params.tensors[i];
    if (params.names[i] != shapes[i].name || t.rows() != shapes[i].rows || t.cols() != shapes[i].cols) {
      throw Error(ErrorCode::ShapeMismatch, "tensor " + shapes[i].name + " has the wrong shape");
    }
  }
}

template <typename S>
std::vector<int> real_positions(const NetSpec<S>& spec, const PaddedSequence& seq) {
  std::vector<int> pos;
  for (int t = 0; t < kSequenceLength; ++t) {
    const int id = seq.token_ids[static_cast<std::size_t>(t)];
    if (id == kPadId) continue;
    if (id < 0 || id >= spec.embedding->rows()) throw Error(ErrorCode::ShapeMismatch, "token id outside the embedding table");
    pos.push_back(t);
  }
  return pos;
}

template <typename S>
Vec<S> sigmoid(const Vec<S>& a) {
  return (S(1) + (-a.array()).exp()).inverse().matrix();
}

// Per-sequence intermediate values kept for the backward pass.
template <typename S>
struct Cache {
  std::vector<int> pos;
  Mat<S> hs;  // H x (L + 1), column 0 is the initial state
  Mat<S> cs;  // LSTM cell states, H x (L + 1)
  Mat<S> gates;  // activated gates per step
  Mat<S> aux;  // LSTM tanh(c); GRU r * h_prev
  Mat<S> embedded;  // CNN: d x (300 + max width), zero beyond the sequence
  std::vector<std::vector<int>> argmax;  // CNN: per width, per filter; -1 when no window
  std::vector<Vec<S>> pooled_pre;  // CNN: max pre-activation per filter
};

template <typename S>
auto input_of(const NetSpec<S>& spec, const PaddedSequence& seq, int t) {
  return spec.embedding->row(seq.token_ids[static_cast<std::size_t>(t)]).transpose();
}

template <typename S>
Vec<S> lstm_features(const NetSpec<S>& spec, const NetParams<S>& p, const PaddedSequence& seq, Cache<S>& c) {
  const auto& W = p.tensors[0];
  const auto& U = p.tensors[1];
  const auto& b = p.tensors[2];
  const Eigen::Index H = spec.hidden;
  const auto L = static_cast<Eigen::Index>(c.pos.size());
  c.hs = Mat<S>::Zero(H, L + 1);
  c.cs = Mat<S>::Zero(H, L + 1);
  c.gates.resize(4 * H, L);
  c.aux.resize(H, L);
  Vec<S> a(4 * H);
  for (Eigen::Index k = 0; k < L; ++k) {
    a.noalias() = W * input_of(spec, seq, c.pos[static_cast<std::size_t>(k)]);
    a.noalias() += U * c.hs.col(k);
    a += b.col(0);
    auto g = c.gates.col(k);
    g.segment(0, 2 * H) = sigmoid<S>(a.segment(0, 2 * H));
    g.segment(2 * H, H) = a.segment(2 * H, H).array().tanh().matrix();
    g.segment(3 * H, H) = sigmoid<S>(a.segment(3 * H, H));
    c.cs.col(k + 1) = g.segment(H, H).cwiseProduct(c.cs.col(k)) + g.segment(0, H).cwiseProduct(g.segment(2 * H, H));
    c.aux.col(k) = c.cs.col(k + 1).array().tanh().matrix();
    c.hs.col(k + 1) = g.segment(3 * H, H).cwiseProduct(c.aux.col(k));
  }
  return c.hs.col(L);
}

template <typename S>
void lstm_backward(const NetSpec<S>& spec, const NetParams<S>& p, const PaddedSequence& seq, const Cache<S>& c,
                   const Vec<S>& dphi, NetParams<S>& grad) {
  const auto& U = p.tensors[1];
  auto& dW = grad.tensors[0];
  auto& dU = grad.tensors[1];
  auto& db = grad.tensors[2];
  const Eigen::Index H = spec.hidden;
  Vec<S> dh = dphi;
  Vec<S> dc = Vec<S>::Zero(H);
  Vec<S> da(4 * H);
  for (auto k = static_cast<Eigen::Index>(c.pos.size()) - 1; k >= 0; --k) {
    const auto g = c.gates.col(k);
    const auto i = g.segment(0, H).array();
    const auto f = g.segment(H, H).array();
    const auto cand = g.segment(2 * H, H).array();
    const auto o = g.segment(3 * H, H).array();
    const auto tc = c.aux.col(k).array();
    dc.array() += dh.array() * o * (S(1) - tc * tc);
    da.segment(0, H) = (dc.array() * cand * i * (S(1) - i)).matrix();
    da.segment(H, H) = (dc.array() * c.cs.col(k).array() * f * (S(1) - f)).matrix();
    da.segment(2 * H, H) = (dc.array() * i * (S(1) - cand * cand)).matrix();
    da.segment(3 * H, H) = (dh.array() * tc * o * (S(1) - o)).matrix();
    dW.noalias() += da * input_of(spec, seq, c.pos[static_cast<std::size_t>(k)]).transpose();
    dU.noalias() += da * c.hs.col(k).transpose();
    db += da;
    dh.noalias() = U.transpose() * da;
    dc.array() *= f;
  }
}

template <typename S>
Vec<S> gru_features(const NetSpec<S>& spec, const NetParams<S>& p, const PaddedSequence& seq, Cache<S>& c) {
  const auto& W = p.tensors[0];
  const auto& U = p.tensors[1];
  const auto& b = p.tensors[2];
  const Eigen::Index H = spec.hidden;
  const auto L = static_cast<Eigen::Index>(c.pos.size());
  c.hs = Mat<S>::Zero(H, L + 1);
  c.gates.resize(3 * H, L);
  c.aux.resize(H, L);
  Vec<S> ax(3 * H);
  for (Eigen::Index k = 0; k < L; ++k) {
    const auto h = c.hs.col(k);
    ax.noalias() = W * input_of(spec, seq, c.pos[static_cast<std::size_t>(k)]);
    ax += b.col(0);
    ax.segment(0, 2 * H).noalias() += U.topRows(2 * H) * h;
    auto g = c.gates.col(k);
    g.segment(0, 2 * H) = sigmoid<S>(ax.segment(0, 2 * H));
    c.aux.col(k) = g.segment(H, H).cwiseProduct(h);
    ax.segment(2 * H, H).noalias() += U.bottomRows(H) * c.aux.col(k);
    g.segment(2 * H, H) = ax.segment(2 * H, H).array().tanh().matrix();
    const auto z = g.segment(0, H).array();
    c.hs.col(k + 1) = ((S(1) - z) * h.array() + z * g.segment(2 * H, H).array()).matrix();
  }
  return c.hs.col(L);
}

template <typename S>
void gru_backward(const NetSpec<S>& spec, const NetParams<S>& p, const PaddedSequence& seq, const Cache<S>& c,
                  const Vec<S>& dphi, NetParams<S>& grad) {
  const auto& U = p.tensors[1];
  auto& dW = grad.tensors[0];
  auto& dU = grad.tensors[1];
  auto& db = grad.tensors[2];
  const Eigen::Index H = spec.hidden;
  Vec<S> dh = dphi;
  Vec<S> da(3 * H);
  Vec<S> drh(H);
  for (auto k = static_cast<Eigen::Index>(c.pos.size()) - 1; k >= 0; --k) {
    const auto g = c.gates.col(k);
    const auto z = g.segment(0, H).array();
    const auto r = g.segment(H, H).array();
    const auto n = g.segment(2 * H, H).array();
    const auto h = c.hs.col(k).array();
    da.segment(2 * H, H) = (dh.array() * z * (S(1) - n * n)).matrix();
    da.segment(0, H) = (dh.array() * (n - h) * z * (S(1) - z)).matrix();
    drh.noalias() = U.bottomRows(H).transpose() * da.segment(2 * H, H);
    da.segment(H, H) = (drh.array() * h * r * (S(1) - r)).matrix();

    dW.noalias() += da * input_of(spec, seq, c.pos[static_cast<std::size_t>(k)]).transpose();
    db += da;
    dU.topRows(2 * H).noalias() += da.segment(0, 2 * H) * c.hs.col(k).transpose();
    dU.bottomRows(H).noalias() += da.segment(2 * H, H) * c.aux.col(k).transpose();

    Vec<S> prev = (dh.array() * (S(1) - z) + drh.array() * r).matrix();
    prev.noalias() += U.topRows(2 * H).transpose() * da.segment(0, 2 * H);
    dh = std::move(prev);
  }
}

template <typename S>
Vec<S> cnn_features(const NetSpec<S>& spec, const NetParams<S>& p, const PaddedSequence& seq, Cache<S>& c) {
  const Eigen::Index d = spec.input_dim();
  const int max_width = *std::max_element(spec.widths.begin(), spec.widths.end());
  c.embedded = Mat<S>::Zero(d, kSequenceLength + max_width);
  for (int t : c.pos) c.embedded.col(t) = input_of(spec, seq, t);

  Vec<S> phi(spec.feature_dim());
  c.argmax.assign(spec.widths.size(), {});
  c.pooled_pre.assign(spec.widths.size(), {});
  Vec<S> a(spec.filters);
  for (std::size_t j = 0; j < spec.widths.size(); ++j) {
    const int w = spec.widths[j];
    const auto& F = p.tensors[2 * j];
    const auto& bias = p.tensors[2 * j + 1];
    auto& best = c.pooled_pre[j];
    auto& arg = c.argmax[j];
    best = Vec<S>::Zero(spec.filters);
    arg.assign(static_cast<std::size_t>(spec.filters), -1);
    for (int t : c.pos) {
      const Eigen::Map<const Vec<S>> window(c.embedded.col(t).data(), w * d);
      a.noalias() = F * window;
      a += bias.col(0);
      for (int f = 0; f < spec.filters; ++f) {
        if (arg[static_cast<std::size_t>(f)] < 0 || a(f) > best(f)) {
          best(f) = a(f);
          arg[static_cast<std::size_t>(f)] = t;
        }
      }
    }
    phi.segment(static_cast<Eigen::Index>(j) * spec.filters, spec.filters) = best.cwiseMax(S(0));
  }
  return phi;
}

template <typename S>
void cnn_backward(const NetSpec<S>& spec, const Cache<S>& c, const Vec<S>& dphi, NetParams<S>& grad) {
  const Eigen::Index d = spec.input_dim();
  for (std::size_t j = 0; j < spec.widths.size(); ++j) {
    const int w = spec.widths[j];
    auto& dF = grad.tensors[2 * j];
    auto& db = grad.tensors[2 * j + 1];
    for (int f = 0; f < spec.filters; ++f) {
      const int t = c.argmax[j][static_cast<std::size_t>(f)];
      if (t < 0 || !(c.pooled_pre[j](f) > S(0))) continue;
      const S g = dphi(static_cast<Eigen::Index>(j) * spec.filters + f);
      const Eigen::Map<const Vec<S>> window(c.embedded.col(t).data(), w * d);
      dF.row(f) += g * window.transpose();
      db(f, 0) += g;
    }
  }
}

template <typename S>
Vec<S> mean_features(const NetSpec<S>& spec, const PaddedSequence& seq, const Cache<S>& c) {
  Vec<S> phi = Vec<S>::Zero(spec.input_dim());
  for (int t : c.pos) phi += input_of(spec, seq, t);
  if (!c.pos.empty()) phi /= static_cast<S>(c.pos.size());
  return phi;
}

template <typename S>
Vec<S> features(const NetSpec<S>& spec, const NetParams<S>& p, const PaddedSequence& seq, Cache<S>& c) {
  c.pos = real_positions(spec, seq);
  switch (spec.kind) {
    case NetKind::Lstm: return lstm_features(spec, p, seq, c);
    case NetKind::Gru: return gru_features(spec, p, seq, c);
    case NetKind::CnnMax: return cnn_features(spec, p, seq, c);
    case NetKind::MeanPool: return mean_features(spec, seq, c);
  }
  return {};
}

template <typename S>
S cross_entropy(const Vec<S>& logits, ClassId label) {
  const S m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum()) - logits(label);
}

template <typename S>
S loss_only(const NetSpec<S>& spec, const NetParams<S>& params, const PaddedSequence& seq, ClassId label) {
  return cross_entropy<S>(forward(spec, params, seq), label);
}

}  // namespace

template <typename Scalar>
NetParams<Scalar> init_params(const NetSpec<Scalar>& spec, std::uint64_t seed) {
  validate_spec(spec);
  Rng rng(seed);
  NetParams<Scalar> params;
  for (const auto& shape : layout(spec)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, shape.fan_in)));
    Mat<Scalar> t(shape.rows, shape.cols);
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * bound);
    }
    params.names.push_back(shape.name);
    params.tensors.push_back(std::move(t));
  }
  if (spec.kind == NetKind::Lstm) params.at("b").middleRows(spec.hidden, spec.hidden).setOnes();
  return params;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params,
                                                 const PaddedSequence& seq) {
  check_shapes(spec, params);
  Cache<Scalar> cache;
  const Vec<Scalar> phi = features(spec, params, seq, cache);
  Vec<Scalar> logits = params.at("head_b").col(0);
  logits.noalias() += params.at("head_W") * phi;
  return logits;
}

template <typename Scalar>
Scalar loss_and_gradient(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params, const PaddedSequence& seq,
                         ClassId label, NetParams<Scalar>& grad, Rng* dropout_rng) {
  check_shapes(spec, params);
  if (label < 0 || label >= spec.num_classes) throw Error(ErrorCode::InvalidArgument, "label out of range");
  if (grad.tensors.size() != params.tensors.size()) {
    grad = params;
    grad.set_zero();
  }
  Cache<Scalar> cache;
  const Vec<Scalar> phi = features(spec, params, seq, cache);

  Vec<Scalar> mask;
  Vec<Scalar> dropped = phi;
  if (dropout_rng && spec.dropout > 0.0) {
    mask.resize(phi.size());
    const auto keep = static_cast<Scalar>(1.0 / (1.0 - spec.dropout));
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = uniform01(*dropout_rng) < spec.dropout ? Scalar(0) : keep;
    dropped = phi.cwiseProduct(mask);
  }

  const auto& head_W = params.at("head_W");
  Vec<Scalar> logits = params.at("head_b").col(0);
  logits.noalias() += head_W * dropped;
  const Scalar loss = cross_entropy<Scalar>(logits, label);

  Vec<Scalar> dlogits = (logits.array() - logits.maxCoeff()).exp().matrix();
  dlogits /= dlogits.sum();
  dlogits(label) -= Scalar(1);
  grad.at("head_W").noalias() += dlogits * dropped.transpose();
  grad.at("head_b") += dlogits;
  Vec<Scalar> dphi = head_W.transpose() * dlogits;
  if (mask.size() > 0) dphi = dphi.cwiseProduct(mask);

  switch (spec.kind) {
    case NetKind::Lstm: lstm_backward(spec, params, seq, cache, dphi, grad); break;
    case NetKind::Gru: gru_backward(spec, params, seq, cache, dphi, grad); break;
    case NetKind::CnnMax: cnn_backward(spec, cache, dphi, grad); break;
    case NetKind::MeanPool: break;
  }
  return loss;
}

template <typename Scalar>
std::vector<int> pooling_signature(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params,
                                   const PaddedSequence& seq) {
  if (spec.kind != NetKind::CnnMax) return {};
  check_shapes(spec, params);
  Cache<Scalar> cache;
  features(spec, params, seq, cache);
  std::vector<int> signature;
  for (std::size_t j = 0; j < spec.widths.size(); ++j) {
    for (int f = 0; f < spec.filters; ++f) {
      const int t = cache.argmax[j][static_cast<std::size_t>(f)];
      signature.push_back(cache.pooled_pre[j](f) > Scalar(0) ? t : -2 - t);
    }
  }
  return signature;
}

template <typename Scalar>
NetParams<Scalar> train_net(const NetSpec<Scalar>& spec, std::span<const LabeledSequence> data,
                            const NetTrainHyper& hyper, NetTrainTrace* trace) {
  if (data.empty()) throw Error(ErrorCode::EmptyData, "no training sequences");
  if (hyper.batch < 1 || hyper.epochs < 0 || !(hyper.lr >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "invalid network training hyperparameters");
  }
  NetParams<Scalar> params = init_params(spec, hyper.seed);
  NetParams<Scalar> grad = params;
  NetParams<Scalar> m = params;
  NetParams<Scalar> v = params;
  m.set_zero();
  v.set_zero();

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  Rng order_rng(derive_seed(hyper.seed, 1));
  Rng dropout_rng(derive_seed(hyper.seed, 2));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle(std::span(order), order_rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      grad.set_zero();
      for (std::size_t i = start; i < end; ++i) {
        const auto& sample = data[order[i]];
        epoch_loss += static_cast<double>(loss_and_gradient(spec, params, sample.sequence, sample.label, grad, &dropout_rng));
      }
      ++step;
      const auto inv_batch = static_cast<Scalar>(1.0 / static_cast<double>(end - start));
      const auto c1 = static_cast<Scalar>(1.0 / (1.0 - std::pow(beta1, static_cast<double>(step))));
      const auto c2 = static_cast<Scalar>(1.0 / (1.0 - std::pow(beta2, static_cast<double>(step))));
      const auto lr = static_cast<Scalar>(hyper.lr);
      for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        const auto g = (grad.tensors[t] * inv_batch).array();
        auto mt = m.tensors[t].array();
        auto vt = v.tensors[t].array();
        mt = Scalar(beta1) * mt + Scalar(1 - beta1) * g;
        vt = Scalar(beta2) * vt + Scalar(1 - beta2) * g.square();
        params.tensors[t].array() -= lr * (mt * c1) / ((vt * c2).sqrt() + Scalar(eps));
      }
      if (!params.all_finite()) throw Error(ErrorCode::InvalidConfig, "network parameters became non-finite");
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return params;
}

template <typename Scalar>
Eigen::MatrixXd predict_proba(const NetSpec<Scalar>& spec, const NetParams<Scalar>& params,
                              std::span<const PaddedSequence> seqs) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(seqs.size()), spec.num_classes);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const Eigen::VectorXd logits = forward(spec, params, seqs[i]).template cast<double>();
    const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
    out.row(static_cast<Eigen::Index>(i)) = (e / e.sum()).transpose();
  }
  return out;
}

double gradient_check(const NetSpec<double>& spec, const NetParams<double>& params, const PaddedSequence& seq,
                      ClassId label, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  NetParams<double> grad;
  loss_and_gradient(spec, params, seq, label, grad);
  const auto signature = pooling_signature(spec, params, seq);

  NetParams<double> probe = params;
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.tensors.size(); ++t) {
    auto& tensor = probe.tensors[t];
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double original = tensor.data()[i];
      tensor.data()[i] = original + epsilon;
      const double plus = loss_only(spec, probe, seq, label);
      const bool plus_same = pooling_signature(spec, probe, seq) == signature;
      tensor.data()[i] = original - epsilon;
      const double minus = loss_only(spec, probe, seq, label);
      const bool minus_same = pooling_signature(spec, probe, seq) == signature;
      tensor.data()[i] = original;
      if (!plus_same || !minus_same) continue;

      const double numeric = (plus - minus) / (2 * epsilon);
      const double analytic = grad.tensors[t].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

#define LAWAREA_INSTANTIATE_NEURAL(S)                                                                              \
  template Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> embedding_lookup<S>(const EmbeddingTable&);            \
  template struct NetSpec<S>;                                                                                      \
  template struct NetParams<S>;                                                                                    \
  template NetParams<S> init_params<S>(const NetSpec<S>&, std::uint64_t);                                          \
  template Eigen::Matrix<S, Eigen::Dynamic, 1> forward<S>(const NetSpec<S>&, const NetParams<S>&,                  \
                                                          const PaddedSequence&);                                  \
  template S loss_and_gradient<S>(const NetSpec<S>&, const NetParams<S>&, const PaddedSequence&, ClassId,          \
                                  NetParams<S>&, Rng*);                                                            \
  template std::vector<int> pooling_signature<S>(const NetSpec<S>&, const NetParams<S>&, const PaddedSequence&);   \
  template NetParams<S> train_net<S>(const NetSpec<S>&, std::span<const LabeledSequence>, const NetTrainHyper&,    \
                                     NetTrainTrace*);                                                              \
  template Eigen::MatrixXd predict_proba<S>(const NetSpec<S>&, const NetParams<S>&, std::span<const PaddedSequence>);

LAWAREA_INSTANTIATE_NEURAL(float)
LAWAREA_INSTANTIATE_NEURAL(double)

}  // namespace lawarea
