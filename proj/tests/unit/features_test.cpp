#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lawarea/error.hpp"
#include "lawarea/features.hpp"
#include "lawarea/feature_matrix.hpp"
#include "lawarea/random.hpp"
#include "lawarea/synthetic.hpp"
#include "tfidf_oracle.hpp"

using namespace lawarea;

namespace {

TokenSequence seq(std::vector<std::string> t) { return {std::move(t), ""}; }

TfidfOptions unfiltered(int max_ngram) {
  TfidfOptions o;
  o.min_count = 0;
  o.max_doc_frac = 2.0;
  o.max_ngram = max_ngram;
  return o;
}

std::vector<TokenSequence> random_corpus(Rng& rng) {
  const std::size_t docs = 2 + uniform_index(rng, 49);
  const std::size_t vocab = 3 + uniform_index(rng, 12);
  std::vector<TokenSequence> corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    TokenSequence s;
    const std::size_t len = uniform_index(rng, 15);
    for (std::size_t i = 0; i < len; ++i) s.tokens.push_back("w" + std::to_string(uniform_index(rng, vocab)));
    corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace

TEST(Ngrams, UnigramsThenBigrams) {
  EXPECT_EQ(extract_ngrams(seq({"a", "b", "c"})), (std::vector<std::string>{"a", "b", "c", "a b", "b c"}));
  EXPECT_EQ(extract_ngrams(seq({"a"})), std::vector<std::string>{"a"});
  EXPECT_TRUE(extract_ngrams(seq({})).empty());
  EXPECT_EQ(extract_ngrams(seq({"a", "b"}), 1), (std::vector<std::string>{"a", "b"}));
}

TEST(FitTfidf, CountThresholdIsStrict) {
  std::vector<TokenSequence> corpus;
  const int x_per_doc[] = {3, 2, 2, 2, 2};
  for (int d = 0; d < 10; ++d) {
    TokenSequence s;
    s.tokens.push_back("u" + std::to_string(d));
    if (d < 5) {
      for (int i = 0; i < x_per_doc[d]; ++i) s.tokens.push_back("x");
    }
    corpus.push_back(s);
  }
  TfidfOptions o;
  o.max_ngram = 1;
  const TfidfModel m = fit_tfidf(corpus, o);
  EXPECT_EQ(m.vocabulary, std::vector<std::string>{"x"});
  EXPECT_EQ(m.doc_freq[0], 5u);
}

TEST(FitTfidf, DocumentFrequencyCap) {
  TfidfOptions o;
  o.min_count = 0;
  o.max_ngram = 1;
  const TfidfModel m = fit_tfidf({seq({"a", "b"}), seq({"a", "c"}), seq({"a", "d"})}, o);
  EXPECT_EQ(m.vocabulary, (std::vector<std::string>{"b", "c", "d"}));
}

TEST(FitTfidf, HandComputedIdfAndTransform) {
  const TfidfModel m = fit_tfidf({seq({"a", "b"}), seq({"a", "c"})}, unfiltered(1));
  ASSERT_EQ(m.vocabulary, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_NEAR(m.idf[0], 1.0, 1e-12);
  EXPECT_NEAR(m.idf[1], std::log(1.5) + 1.0, 1e-12);
  EXPECT_NEAR(m.idf[1], 1.405465, 1e-6);

  const SparseVector v = transform_tfidf(m, seq({"a", "b"}));
  EXPECT_NEAR(v.coeff(0), 0.57974, 1e-5);
  EXPECT_NEAR(v.coeff(1), 0.81481, 1e-5);
  EXPECT_EQ(v.coeff(2), 0.0);

  const SparseVector doubled = transform_tfidf(m, seq({"a", "b", "a", "b"}));
  EXPECT_NEAR((doubled - v).norm(), 0.0, 1e-15);
}

TEST(FitTfidf, OutOfVocabularyDocumentIsZero) {
  const TfidfModel m = fit_tfidf({seq({"a", "b"}), seq({"a", "c"})}, unfiltered(2));
  EXPECT_EQ(transform_tfidf(m, seq({"zzz"})).nonZeros(), 0);
  EXPECT_EQ(transform_tfidf(m, seq({})).nonZeros(), 0);
}

TEST(FitTfidf, Errors) {
  try {
    fit_tfidf({seq({"a"})}, TfidfOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyVocabulary);
  }
  try {
    fit_tfidf({}, TfidfOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyData);
  }
}

TEST(FitTfidf, MatchesBruteForceOracle) {
  Rng rng(77);
  for (int round = 0; round < 25; ++round) {
    const auto corpus = random_corpus(rng);
    TfidfOptions o;
    o.min_count = uniform_index(rng, 4);
    o.max_doc_frac = 0.4 + 0.9 * uniform01(rng);
    o.max_ngram = 1 + static_cast<int>(uniform_index(rng, 2));

    std::vector<std::vector<std::string>> raw;
    for (const auto& d : corpus) raw.push_back(d.tokens);
    const auto ref = oracle::fit(raw, static_cast<double>(o.min_count), o.max_doc_frac, o.max_ngram);
    if (ref.idf.empty()) continue;

    const TfidfModel m = fit_tfidf(corpus, o);
    ASSERT_EQ(static_cast<std::size_t>(m.dimension()), ref.idf.size());
    for (const auto& d : corpus) {
      const SparseVector v = transform_tfidf(m, d);
      const auto expected = oracle::transform(ref, d.tokens, o.max_ngram);
      int last = -1;
      for (SparseVector::InnerIterator it(v); it; ++it) {
        EXPECT_GT(it.index(), last);
        last = static_cast<int>(it.index());
        ASSERT_LT(it.index(), m.dimension());
      }
      for (Eigen::Index j = 0; j < m.dimension(); ++j) {
        const auto found = expected.find(m.vocabulary[static_cast<std::size_t>(j)]);
        const double want = found == expected.end() ? 0.0 : found->second;
        EXPECT_NEAR(v.coeff(j), want, 1e-12);
      }
    }
  }
}

TEST(FitTfidf, SmallVocabularyBelowLarge) {
  const SyntheticSpec spec = table1_spec(0.05);
  const Lexicon lex = make_lexicon(spec.vocabulary);
  const Dataset ds = generate_synthetic_corpus(spec, 8);
  std::vector<TokenSequence> complete, simple;
  for (const auto& d : ds.documents) {
    complete.push_back(complete_pipeline(d.text, lex));
    simple.push_back(simple_pipeline(d.text));
  }
  const TfidfModel small = fit_tfidf(complete, {}, PipelineMode::Complete);
  const TfidfModel large = fit_tfidf(simple, {}, PipelineMode::Simple);
  EXPECT_EQ(small.variant(), "Small");
  EXPECT_EQ(large.variant(), "Large");
  EXPECT_LT(small.dimension(), large.dimension());
}

TEST(FeatureMatrix, RowsAndSelection) {
  SparseVector a(4), b(4);
  a.insert(1) = 2.0;
  b.insert(3) = -1.0;
  const FeatureMatrix m = FeatureMatrix::from_rows(std::vector<SparseVector>{a, b}, 4);
  ASSERT_TRUE(m.is_sparse());
  EXPECT_EQ(m.value(0, 1), 2.0);
  const std::vector<std::size_t> rows{1, 1, 0};
  const FeatureMatrix s = m.select_rows(rows);
  EXPECT_EQ(s.rows(), 3);
  EXPECT_EQ(s.value(0, 3), -1.0);
  EXPECT_EQ(s.value(2, 1), 2.0);

  const FeatureMatrix d = FeatureMatrix::from_rows(std::vector<Eigen::VectorXd>{Eigen::Vector2d(1, 2)}, 2);
  EXPECT_FALSE(d.is_sparse());
  EXPECT_EQ(d.value(0, 1), 2.0);
}
