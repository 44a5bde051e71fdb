#include <gtest/gtest.h>

#include <cstring>

#include "lawarea/error.hpp"
#include "lawarea/neural.hpp"
#include "lawarea/random.hpp"

using namespace lawarea;

namespace {

constexpr int kVocab = 24;  // ids 2 .. kVocab + 1 are words
constexpr int kDim = 5;

std::shared_ptr<const Eigen::MatrixXd> random_embedding(std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(kVocab + 2, kDim);
  for (Eigen::Index i = 2; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < kDim; ++j) e(i, j) = uniform01(rng) * 2 - 1;
  }
  return std::make_shared<const Eigen::MatrixXd>(e);
}

NetSpec<double> spec_for(NetKind kind) {
  NetSpec<double> s;
  s.kind = kind;
  s.embedding = random_embedding(1);
  s.hidden = 4;
  s.filters = 3;
  s.widths = {2, 3};
  s.num_classes = 4;
  return s;
}

std::vector<int> random_ids(Rng& rng, std::size_t n) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(1 + static_cast<int>(uniform_index(rng, kVocab + 1)));
  return ids;
}

const NetKind kSequenceKinds[] = {NetKind::Lstm, NetKind::Gru, NetKind::CnnMax};

}  // namespace

TEST(PadSequence, PadsAndTruncates) {
  const std::vector<int> three{5, 6, 7};
  const PaddedSequence p = pad_sequence(three);
  EXPECT_EQ(p.token_ids[2], 7);
  for (int i = 3; i < kSequenceLength; ++i) EXPECT_EQ(p.token_ids[static_cast<std::size_t>(i)], kPadId);

  std::vector<int> long_ids(400);
  for (int i = 0; i < 400; ++i) long_ids[static_cast<std::size_t>(i)] = i + 2;
  const PaddedSequence t = pad_sequence(long_ids);
  EXPECT_EQ(t.token_ids.front(), 2);
  EXPECT_EQ(t.token_ids.back(), 301);
  const std::vector<int> exact(long_ids.begin(), long_ids.begin() + kSequenceLength);
  EXPECT_EQ(pad_sequence(exact), t);
}

TEST(SequenceEncoder, MapsWordsAndUnknowns) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(2, 3);
  const EmbeddingTable table({"a", "b"}, v, {});
  const SequenceEncoder enc(table);
  EXPECT_EQ(enc.ids({{"b", "zz", "a"}, ""}), (std::vector<int>{3, kOovId, 2}));
  EXPECT_EQ(enc.vocabulary_size(), 4);
  const Eigen::MatrixXd lookup = embedding_lookup<double>(table);
  EXPECT_EQ(lookup.rows(), 4);
  EXPECT_TRUE(lookup.topRows(2).isZero(0));
  EXPECT_EQ(lookup.row(3), v.row(1));
}

TEST(Forward, ZeroParamsGiveHeadBias) {
  for (NetKind kind : {NetKind::Lstm, NetKind::Gru, NetKind::CnnMax, NetKind::MeanPool}) {
    const NetSpec<double> spec = spec_for(kind);
    NetParams<double> params = init_params(spec, 3);
    params.set_zero();
    params.at("head_b") << 0.1, -0.2, 0.3, 0.4;
    Rng rng(2);
    for (std::size_t len : {0u, 7u}) {
      const auto ids = random_ids(rng, len);
      const Eigen::VectorXd logits = forward(spec, params, pad_sequence(ids));
      EXPECT_EQ(logits, params.at("head_b")) << to_string(kind) << " len " << len;
    }
  }
}

TEST(Forward, ShapeMismatchDetected) {
  const NetSpec<double> spec = spec_for(NetKind::Lstm);
  NetParams<double> params = init_params(spec, 3);
  params.at("U").resize(2, 2);
  try {
    forward(spec, params, pad_sequence(std::vector<int>{2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  const NetParams<double> good = init_params(spec, 3);
  try {
    forward(spec, good, pad_sequence(std::vector<int>{kVocab + 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Forward, GruWithSaturatedGatesIsAnElmanStep) {
  NetSpec<double> spec = spec_for(NetKind::Gru);
  NetParams<double> params = init_params(spec, 5);
  const int h = spec.hidden;
  params.at("W").topRows(2 * h).setZero();
  params.at("U").topRows(2 * h).setZero();
  params.at("b").topRows(2 * h).setConstant(60.0);  // z = r = 1
  const int id = 7;
  const Eigen::VectorXd x = spec.embedding->row(id).transpose();
  const Eigen::VectorXd state =
      (params.at("W").bottomRows(h) * x + params.at("b").bottomRows(h)).array().tanh().matrix();
  const Eigen::VectorXd expected = params.at("head_W") * state + params.at("head_b");
  const Eigen::VectorXd got = forward(spec, params, pad_sequence(std::vector<int>{id}));
  EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, PlantedBigramDetectorFiresOnlyWithBigram) {
  NetSpec<double> spec = spec_for(NetKind::CnnMax);
  spec.filters = 1;
  spec.widths = {2};
  spec.num_classes = 2;
  // Unit rows: a window scores |e_a|^2 + |e_b|^2 = 2 only when it is (a, b).
  Eigen::MatrixXd unit = *spec.embedding;
  unit.bottomRows(kVocab).rowwise().normalize();
  spec.embedding = std::make_shared<const Eigen::MatrixXd>(unit);
  NetParams<double> params = init_params(spec, 1);
  params.set_zero();
  const int a = 4, b = 9;
  params.at("conv2_W") << spec.embedding->row(a), spec.embedding->row(b);
  params.at("head_W")(0, 0) = 1.0;
  Rng rng(8);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto ids = random_ids(rng, 12);
    bool planted = false;
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) planted |= ids[i] == a && ids[i + 1] == b;
    if (planted) continue;
    const double without = forward(spec, params, pad_sequence(ids))(0);
    ids.insert(ids.begin() + 5, {a, b});
    const double with = forward(spec, params, pad_sequence(ids))(0);
    EXPECT_GT(with, without);
    ++compared;
  }
  EXPECT_GT(compared, 20);
}

TEST(Forward, AppendingPadsNeverChangesLogits) {
  Rng rng(12);
  for (NetKind kind : kSequenceKinds) {
    const NetSpec<double> spec = spec_for(kind);
    const NetParams<double> params = init_params(spec, 9);
    for (int trial = 0; trial < 10; ++trial) {
      auto ids = random_ids(rng, 1 + uniform_index(rng, 20));
      const Eigen::VectorXd base = forward(spec, params, pad_sequence(ids));
      ids.resize(ids.size() + 1 + uniform_index(rng, 50), kPadId);
      EXPECT_EQ(forward(spec, params, pad_sequence(ids)), base) << to_string(kind);
    }
  }
}

TEST(Loss, MatchesNegativeLogSoftmax) {
  for (NetKind kind : kSequenceKinds) {
    const NetSpec<double> spec = spec_for(kind);
    const NetParams<double> params = init_params(spec, 4);
    const PaddedSequence seq = pad_sequence(std::vector<int>{3, 4, 5, 6});
    const Eigen::VectorXd logits = forward(spec, params, seq);
    const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
    const Eigen::VectorXd p = (e / e.sum()).matrix();
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    NetParams<double> grad;
    const double loss = loss_and_gradient(spec, params, seq, 2, grad);
    EXPECT_NEAR(loss, -std::log(p(2)), 1e-12);
    EXPECT_EQ(grad.names, params.names);
  }
}

TEST(GradientCheck, RecurrentAndConvolutionalNets) {
  Rng rng(31);
  for (NetKind kind : {NetKind::Lstm, NetKind::Gru, NetKind::CnnMax, NetKind::MeanPool}) {
    const NetSpec<double> spec = spec_for(kind);
    for (int draw = 0; draw < 3; ++draw) {
      const NetParams<double> params = init_params(spec, 100 + static_cast<std::uint64_t>(draw));
      const auto ids = random_ids(rng, 3 + uniform_index(rng, 6));
      const double err = gradient_check(spec, params, pad_sequence(ids), static_cast<ClassId>(uniform_index(rng, 4)));
      EXPECT_LT(err, 1e-4) << to_string(kind) << " draw " << draw;
    }
  }
}

TEST(GradientCheck, RejectsNonPositiveEpsilon) {
  const NetSpec<double> spec = spec_for(NetKind::Lstm);
  try {
    gradient_check(spec, init_params(spec, 1), pad_sequence(std::vector<int>{2}), 0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(TrainNet, EmbeddingFrozenAndTrivialSchedules) {
  NetSpec<float> spec;
  spec.kind = NetKind::Lstm;
  spec.embedding = std::make_shared<const Eigen::MatrixXf>(random_embedding(2)->cast<float>());
  spec.hidden = 4;
  spec.num_classes = 3;
  Rng rng(5);
  std::vector<LabeledSequence> data;
  for (int i = 0; i < 12; ++i) data.push_back({pad_sequence(random_ids(rng, 6)), i % 3});

  const Eigen::MatrixXf before = *spec.embedding;
  NetTrainHyper h;
  h.epochs = 2;
  h.batch = 4;
  NetTrainTrace trace;
  const NetParams<float> trained = train_net(spec, data, h, &trace);
  EXPECT_EQ(std::memcmp(before.data(), spec.embedding->data(), sizeof(float) * static_cast<std::size_t>(before.size())), 0);
  EXPECT_EQ(trace.epoch_loss.size(), 2u);
  EXPECT_TRUE(trained.all_finite());

  const NetParams<float> init = init_params(spec, h.seed);
  h.epochs = 0;
  EXPECT_EQ(train_net(spec, data, h).tensors, init.tensors);
  h.epochs = 3;
  h.lr = 0.0;
  EXPECT_EQ(train_net(spec, data, h).tensors, init.tensors);

  try {
    train_net(spec, std::span<const LabeledSequence>(), h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyData);
  }
}

TEST(TrainNet, LearnsAToyKeywordTask) {
  NetSpec<float> spec;
  spec.kind = NetKind::Gru;
  spec.embedding = std::make_shared<const Eigen::MatrixXf>(random_embedding(6)->cast<float>());
  spec.hidden = 8;
  spec.num_classes = 3;
  Rng rng(7);
  std::vector<LabeledSequence> data;
  std::vector<PaddedSequence> seqs;
  std::vector<ClassId> labels;
  for (int i = 0; i < 90; ++i) {
    const int label = i % 3;
    auto ids = random_ids(rng, 6);
    for (auto& id : ids) id = 5 + (id % 18);  // ids 2..4 are reserved as keywords
    ids[uniform_index(rng, ids.size())] = 2 + label;
    data.push_back({pad_sequence(ids), label});
    seqs.push_back(data.back().sequence);
    labels.push_back(label);
  }
  NetTrainHyper h;
  h.epochs = 30;
  h.batch = 10;
  h.lr = 0.02;
  const NetParams<float> params = train_net(spec, data, h);
  const Eigen::MatrixXd p = predict_proba(spec, params, seqs);
  int correct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best;
    p.row(i).maxCoeff(&best);
    correct += best == labels[static_cast<std::size_t>(i)];
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-6);
  }
  EXPECT_GE(correct, 80);
}

TEST(NetKindNames, RoundTrip) {
  for (NetKind kind : {NetKind::Lstm, NetKind::Gru, NetKind::CnnMax, NetKind::MeanPool}) {
    EXPECT_EQ(parse_net_kind(to_string(kind)), kind);
  }
}
