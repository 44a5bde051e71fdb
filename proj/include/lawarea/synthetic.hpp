#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lawarea/corpus.hpp"
#include "lawarea/preprocess.hpp"

namespace lawarea {

/// A lemma with the inflected surfaces the generator may emit for it.
struct WordForms {
  std::string lemma;
  PartOfSpeech pos = PartOfSpeech::Noun;
  std::vector<std::string> surfaces;
};

struct SyntheticVocabulary {
  std::vector<std::vector<WordForms>> class_keywords;  // indexed by class id
  std::vector<WordForms> filler;                       // shared content words
  std::vector<std::string> function_words;             // tagged OTHER by the lexicon
  std::vector<std::string> names;                      // entries of the name registry
};

struct SyntheticSpec {
  LabelSchema schema = LabelSchema::canonical();
  std::vector<std::size_t> n_per_class;  // schema order
  std::vector<double> average_tokens;    // schema order; mean words per document
  SyntheticVocabulary vocabulary;

  // Per-position probabilities; the rest is shared filler.
  double keyword_rate = 0.12;
  double cross_keyword_rate = 0.0;  // keyword of a random other class
  double function_word_rate = 0.30;
  double number_rate = 0.03;
  double name_rate = 0.02;
  double url_rate = 0.004;
  double email_rate = 0.003;
  double punctuation_rate = 0.10;  // after a word
};

/// Generates labeled petitions from class keyword lists plus shared filler.
/// Every document contains at least one keyword of its class. Throws
/// Error(OverlappingKeywords) if a keyword surface is shared between classes or
/// with the filler, and Error(InvalidArgument) if a class has < 3 keywords.
Dataset generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

/// Lexicon covering every surface of the vocabulary (keywords, filler,
/// function words) and the name registry.
Lexicon make_lexicon(const SyntheticVocabulary& vocabulary);

/// Pseudo-Portuguese vocabulary; inflected forms share a lemma, some filler
/// stems carry accents.
SyntheticVocabulary make_pseudo_vocabulary(std::size_t n_classes, std::size_t keywords_per_class,
                                           std::size_t filler_words, std::uint64_t vocabulary_seed);

/// Per-class sample counts and average token counts of the petition dataset.
const std::vector<std::size_t>& table1_counts();
const std::vector<double>& table1_average_tokens();

inline constexpr std::uint64_t kTable1VocabularySeed = 20190707;

/// Reference-count spec over the canonical schema; counts are scaled and rounded
/// (minimum 2 per class). The vocabulary is fixed (independent of corpus seed).
SyntheticSpec table1_spec(double scale = 1.0);

}  // namespace lawarea
