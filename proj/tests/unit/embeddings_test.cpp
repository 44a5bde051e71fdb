#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lawarea/embeddings.hpp"
#include "lawarea/error.hpp"
#include "lawarea/random.hpp"
#include "lawarea/sgns.hpp"

using namespace lawarea;

namespace {

ErrorCode read_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_embeddings_text(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ErrorCode::InvalidArgument;
}

EmbeddingTable table(std::vector<std::string> words, Eigen::MatrixXd v) {
  return EmbeddingTable(std::move(words), std::move(v), {});
}

double cosine(const EmbeddingTable& t, const std::string& a, const std::string& b) {
  const Eigen::VectorXd x = t.row(*t.find(a));
  const Eigen::VectorXd y = t.row(*t.find(b));
  return x.dot(y) / (x.norm() * y.norm());
}

}  // namespace

TEST(EmbeddingText, ParsesValidFile) {
  std::istringstream in("2 3\nfoo 1 2 3\nbar -0.5 0 1e-3\n");
  const EmbeddingTable t = read_embeddings_text(in);
  EXPECT_EQ(t.size(), 2);
  EXPECT_EQ(t.dim(), 3);
  EXPECT_EQ(t.metadata().architecture, Architecture::External);
  EXPECT_EQ(t.row(*t.find("bar"))(2), 1e-3);
}

TEST(EmbeddingText, Errors) {
  EXPECT_EQ(read_error("2 3\nfoo 1 2\nbar 1 2 3\n"), ErrorCode::DimensionMismatch);
  EXPECT_EQ(read_error("5 1\na 1\nb 1\nc 1\nd 1\n"), ErrorCode::HeaderMismatch);
  EXPECT_EQ(read_error("2 1\na 1\na 2\n"), ErrorCode::DuplicateWord);
  EXPECT_EQ(read_error("x y\n"), ErrorCode::HeaderMismatch);
}

TEST(EmbeddingText, RoundTripToNineDigits) {
  Rng rng(3);
  Eigen::MatrixXd v(4, 5);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform01(rng) * 2 - 1;
  const EmbeddingTable t = table({"a", "b", "c", "d"}, v);
  std::stringstream io;
  write_embeddings_text(io, t);
  const EmbeddingTable back = read_embeddings_text(io);
  EXPECT_EQ(back.words(), t.words());
  for (Eigen::Index i = 0; i < v.size(); ++i) EXPECT_NEAR(back.vectors()(i), v(i), 1e-9 * std::max(1.0, std::abs(v(i))));
}

TEST(SentenceMean, MeanOfKnownTokens) {
  Eigen::MatrixXd v(2, 2);
  v << 1, 0, 0, 1;
  const EmbeddingTable t = table({"w1", "w2"}, v);
  EXPECT_TRUE(sentence_mean(t, {{"w1", "w2"}, ""}).isApprox(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_EQ(sentence_mean(t, {{"x", "y"}, ""}), Eigen::Vector2d::Zero());
  EXPECT_EQ(sentence_mean(t, {{}, ""}), Eigen::Vector2d::Zero());
  EXPECT_EQ(sentence_mean(t, {{"w2", "zz"}, ""}), Eigen::Vector2d(0, 1));
}

TEST(NearestNeighbors, RankingAndTies) {
  Eigen::MatrixXd v(4, 3);
  v << 1, 0, 0,  //
      0, 1, 0,   //
      0, 0, 1,   //
      2, 0, 0;
  const EmbeddingTable t = table({"q", "b", "a", "dup"}, v);
  const auto n = nearest_neighbors(t, "q", 3);
  ASSERT_EQ(n.size(), 3u);
  EXPECT_EQ(n[0].first, "dup");
  EXPECT_NEAR(n[0].second, 1.0, 1e-12);
  EXPECT_EQ(n[1].first, "a");
  EXPECT_EQ(n[2].first, "b");
  EXPECT_EQ(n[1].second, 0.0);
  try {
    nearest_neighbors(t, "nope", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownWord);
  }
}

TEST(W2VConfig, ValidationRejectsZeroEpochs) {
  W2VConfig c;
  c.epochs = 0;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  EXPECT_EQ(W2VConfig::defaults_for(Architecture::CBoW).initial_lr, 0.05);
}

TEST(Sgns, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const int d = 6, k = 4;
  Eigen::VectorXd center(d), context(d);
  Eigen::MatrixXd neg(d, k);
  for (int i = 0; i < d; ++i) {
    center(i) = uniform01(rng) - 0.5;
    context(i) = uniform01(rng) - 0.5;
    for (int j = 0; j < k; ++j) neg(i, j) = uniform01(rng) - 0.5;
  }
  Eigen::VectorXd gc(d), gp(d);
  Eigen::MatrixXd gn(d, k);
  const double l = sgns::gradient(center, context, neg, gc, gp, gn);
  EXPECT_NEAR(l, sgns::loss(center, context, neg), 1e-14);

  const double eps = 1e-5;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };
  double worst = 0;
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd p = center, m = center;
    p(i) += eps;
    m(i) -= eps;
    worst = std::max(worst, rel(gc(i), (sgns::loss(p, context, neg) - sgns::loss(m, context, neg)) / (2 * eps)));
    p = context;
    m = context;
    p(i) += eps;
    m(i) -= eps;
    worst = std::max(worst, rel(gp(i), (sgns::loss(center, p, neg) - sgns::loss(center, m, neg)) / (2 * eps)));
    for (int j = 0; j < k; ++j) {
      Eigen::MatrixXd np = neg, nm = neg;
      np(i, j) += eps;
      nm(i, j) -= eps;
      worst = std::max(worst, rel(gn(i, j), (sgns::loss(center, context, np) - sgns::loss(center, context, nm)) / (2 * eps)));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Word2Vec, MinCountDropsRareWords) {
  std::vector<TokenSequence> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back({{"a", "b", "c"}, ""});
  for (int i = 0; i < 3; ++i) corpus.push_back({{"rare"}, ""});
  W2VConfig c;
  c.dim = 4;
  c.epochs = 1;
  const EmbeddingTable t = train_word2vec(corpus, c);
  EXPECT_FALSE(t.find("rare").has_value());
  EXPECT_TRUE(t.find("a").has_value());
  EXPECT_EQ(t.metadata().architecture, Architecture::SkipGram);

  c.min_count = 100;
  try {
    train_word2vec(corpus, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyVocabulary);
  }
}

TEST(Word2Vec, DeterministicInReferenceMode) {
  std::vector<TokenSequence> corpus;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    TokenSequence s;
    for (int j = 0; j < 12; ++j) s.tokens.push_back("t" + std::to_string(uniform_index(rng, 20)));
    corpus.push_back(s);
  }
  for (Architecture a : {Architecture::SkipGram, Architecture::CBoW}) {
    W2VConfig c = W2VConfig::defaults_for(a);
    c.dim = 8;
    c.min_count = 1;
    c.seed = 9;
    EXPECT_EQ(train_word2vec(corpus, c).vectors(), train_word2vec(corpus, c).vectors());
  }
}

TEST(Word2Vec, AlternatingPairBecomesNeighbors) {
  std::vector<TokenSequence> corpus;
  TokenSequence s;
  for (int i = 0; i < 1000; ++i) s.tokens.push_back(i % 2 ? "b" : "a");
  corpus.push_back(s);
  // Held-out words co-occur only among themselves.
  TokenSequence other;
  for (int i = 0; i < 1000; ++i) other.tokens.push_back(i % 2 ? "y" : "x");
  corpus.push_back(other);
  W2VConfig c;
  c.dim = 8;
  c.window = 2;
  c.seed = 4;
  Word2VecTrace trace;
  const EmbeddingTable t = train_word2vec(corpus, c, &trace);
  EXPECT_GT(cosine(t, "a", "b"), cosine(t, "a", "x"));
  EXPECT_GT(cosine(t, "a", "b"), cosine(t, "b", "y"));
  ASSERT_EQ(trace.epoch_loss.size(), 5u);
  EXPECT_LT(trace.epoch_loss.back(), trace.epoch_loss.front());
}
