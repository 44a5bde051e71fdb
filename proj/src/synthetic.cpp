#include "lawarea/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "lawarea/error.hpp"
#include "lawarea/random.hpp"

namespace lawarea {
namespace {

template <typename T>
const T& pick(const std::vector<T>& values, Rng& rng) {
  return values[uniform_index(rng, values.size())];
}

std::string capitalize(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 32);
  return word;
}

std::string random_number(Rng& rng) {
  const auto digits = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + uniform_index(rng, 10)));
    if (s[0] == '0') s[0] = '1';
    return s;
  };
  switch (uniform_index(rng, 5)) {
    case 0: return digits(4);
    case 1: return digits(2) + "h" + digits(2);
    case 2: return digits(3) + "." + digits(3);
    case 3: return digits(1);
    default: return digits(2);
  }
}

}  // namespace

Dataset generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  const std::size_t n_classes = spec.schema.size();
  const auto& vocab = spec.vocabulary;
  if (spec.n_per_class.size() != n_classes || spec.average_tokens.size() != n_classes ||
      vocab.class_keywords.size() != n_classes) {
    throw Error(ErrorCode::InvalidArgument, "synthetic spec sizes must match the schema");
  }
  if (vocab.filler.empty()) throw Error(ErrorCode::InvalidArgument, "synthetic vocabulary needs filler words");

  std::unordered_set<std::string> filler_surfaces;
  for (const auto& w : vocab.filler) filler_surfaces.insert(w.surfaces.begin(), w.surfaces.end());
  std::unordered_set<std::string> keyword_surfaces;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (vocab.class_keywords[c].size() < 3) {
      throw Error(ErrorCode::InvalidArgument, "class " + spec.schema.code(c) + " needs at least 3 keywords");
    }
    for (const auto& w : vocab.class_keywords[c]) {
      if (w.surfaces.empty()) throw Error(ErrorCode::InvalidArgument, "keyword without surfaces: " + w.lemma);
      for (const auto& s : w.surfaces) {
        if (filler_surfaces.contains(s) || !keyword_surfaces.insert(s).second) {
          throw Error(ErrorCode::OverlappingKeywords, s);
        }
      }
    }
  }

  static const std::vector<std::string> kPunctuation = {",", ",", ",", ".", ";", ":"};
  Rng rng(seed);
  Dataset ds{{}, spec.schema};
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < spec.n_per_class[c]; ++i) {
      const double avg = spec.average_tokens[c];
      const auto length = static_cast<std::size_t>(
          std::max(3.0, std::round(avg * (0.5 + uniform01(rng)))));
      std::vector<std::string> words;
      words.reserve(length);
      bool has_keyword = false;
      std::size_t last_content = 0;
      for (std::size_t t = 0; t < length; ++t) {
        double r = uniform01(rng);
        const auto take = [&r](double p) {
          if (r < p) return true;
          r -= p;
          return false;
        };
        if (take(spec.keyword_rate)) {
          words.push_back(pick(pick(vocab.class_keywords[c], rng).surfaces, rng));
          has_keyword = true;
          last_content = words.size() - 1;
        } else if (n_classes > 1 && take(spec.cross_keyword_rate)) {
          std::size_t other = uniform_index(rng, n_classes - 1);
          if (other >= c) ++other;
          words.push_back(pick(pick(vocab.class_keywords[other], rng).surfaces, rng));
        } else if (!vocab.function_words.empty() && take(spec.function_word_rate)) {
          words.push_back(pick(vocab.function_words, rng));
        } else if (take(spec.number_rate)) {
          words.push_back(random_number(rng));
        } else if (!vocab.names.empty() && take(spec.name_rate)) {
          words.push_back(capitalize(pick(vocab.names, rng)));
        } else if (take(spec.url_rate)) {
          words.push_back("http://www." + pick(vocab.filler, rng).lemma + ".gov.br/" + random_number(rng));
        } else if (!vocab.names.empty() && take(spec.email_rate)) {
          words.push_back(pick(vocab.names, rng) + "@" + pick(vocab.filler, rng).lemma + ".com.br");
        } else {
          words.push_back(pick(pick(vocab.filler, rng).surfaces, rng));
          last_content = words.size() - 1;
        }
      }
      if (!has_keyword) {
        words[last_content] = pick(pick(vocab.class_keywords[c], rng).surfaces, rng);
      }

      std::string text;
      bool sentence_start = true;
      for (std::size_t t = 0; t < words.size(); ++t) {
        if (!text.empty()) text.push_back(' ');
        text += sentence_start ? capitalize(words[t]) : words[t];
        sentence_start = false;
        if (t + 1 == words.size()) {
          text.push_back('.');
        } else if (uniform01(rng) < spec.punctuation_rate) {
          const auto& p = pick(kPunctuation, rng);
          text += p;
          sentence_start = p == ".";
        }
      }
      ds.documents.push_back({"", std::move(text), static_cast<ClassId>(c)});
    }
  }
  shuffle(std::span(ds.documents), rng);
  for (std::size_t i = 0; i < ds.documents.size(); ++i) {
    std::string id = std::to_string(i + 1);
    ds.documents[i].id = "syn-" + std::string(id.size() < 6 ? 6 - id.size() : 0, '0') + id;
  }
  return ds;
}

Lexicon make_lexicon(const SyntheticVocabulary& vocabulary) {
  Lexicon lexicon;
  const auto add = [&](const WordForms& w) {
    for (const auto& s : w.surfaces) {
      lexicon.add_lemma(s, w.lemma);
      lexicon.add_pos(s, w.pos);
    }
  };
  for (const auto& cls : vocabulary.class_keywords) {
    for (const auto& w : cls) add(w);
  }
  for (const auto& w : vocabulary.filler) add(w);
  for (const auto& f : vocabulary.function_words) lexicon.add_pos(f, PartOfSpeech::Other);
  for (const auto& n : vocabulary.names) lexicon.add_name(n);
  return lexicon;
}

namespace {

WordForms inflect(const std::string& stem, PartOfSpeech pos) {
  switch (pos) {
    case PartOfSpeech::Verb:
      return {stem + "ar", pos, {stem + "ar", stem + "ou", stem + "ava", stem + "ando", stem + "ar\xC3\xA1"}};
    case PartOfSpeech::Adj:
      return {stem + "ico", pos, {stem + "ico", stem + "ica", stem + "icos", stem + "icas"}};
    case PartOfSpeech::Adv:
      return {stem + "mente", pos, {stem + "mente"}};
    default:
      return {stem + "o", PartOfSpeech::Noun, {stem + "o", stem + "os", stem + "a", stem + "as"}};
  }
}

}  // namespace

SyntheticVocabulary make_pseudo_vocabulary(std::size_t n_classes, std::size_t keywords_per_class,
                                           std::size_t filler_words, std::uint64_t vocabulary_seed) {
  static const std::string kConsonants = "bcdfglmnprstv";
  static const std::string kVowels = "aeiou";
  static const std::string kCodas = "lnrs";
  // á é í ó ã in UTF-8
  static const std::vector<std::string> kAccented = {"\xC3\xA1", "\xC3\xA9", "\xC3\xAD", "\xC3\xB3", "\xC3\xA3"};

  Rng rng(vocabulary_seed);
  std::set<std::string> used;
  const auto fresh_stem = [&](bool accented) {
    for (;;) {
      std::string stem;
      stem += kConsonants[uniform_index(rng, kConsonants.size())];
      stem += kVowels[uniform_index(rng, kVowels.size())];
      stem += kConsonants[uniform_index(rng, kConsonants.size())];
      stem += kVowels[uniform_index(rng, kVowels.size())];
      stem += kCodas[uniform_index(rng, kCodas.size())];
      if (!used.insert(stem).second) continue;
      if (accented) stem.replace(3, 1, kAccented[uniform_index(rng, kAccented.size())]);
      return stem;
    }
  };
  static const PartOfSpeech kKeywordPos[] = {PartOfSpeech::Noun, PartOfSpeech::Verb, PartOfSpeech::Noun,
                                             PartOfSpeech::Adj};
  static const PartOfSpeech kFillerPos[] = {PartOfSpeech::Noun, PartOfSpeech::Verb, PartOfSpeech::Adj,
                                            PartOfSpeech::Noun, PartOfSpeech::Adv};

  SyntheticVocabulary vocab;
  vocab.class_keywords.resize(n_classes);
  for (auto& cls : vocab.class_keywords) {
    for (std::size_t k = 0; k < keywords_per_class; ++k) cls.push_back(inflect(fresh_stem(false), kKeywordPos[k % 4]));
  }
  for (std::size_t k = 0; k < filler_words; ++k) {
    vocab.filler.push_back(inflect(fresh_stem(k % 4 == 1), kFillerPos[k % 5]));
  }
  vocab.function_words = {"o",   "a",   "os",   "as",   "de", "do",   "da",   "dos",  "das",  "em",  "no",
                          "na",  "que", "para", "com",  "por", "um",  "uma",  "e",    "se",   "ao",  "pelo",
                          "pela", "sua", "seu", "mais", "foi", "n\xC3\xA3o", "est\xC3\xA1", "j\xC3\xA1"};
  vocab.names = {"maria", "jose",  "ana",     "joao",    "antonio", "francisco", "carlos", "paulo",
                 "pedro", "lucas", "luiz",    "marcos",  "luis",    "gabriel",   "rafael", "daniel",
                 "marcelo", "bruno", "eduardo", "felipe", "raimundo", "rodrigo", "manoel", "mateus",
                 "andre", "fernando", "fabio", "leonardo", "gustavo", "juliana", "adriana", "marcia",
                 "fernanda", "patricia", "aline", "sandra", "camila", "amanda", "bruna", "jessica"};
  return vocab;
}

const std::vector<std::size_t>& table1_counts() {
  static const std::vector<std::size_t> counts = {696, 771, 611, 1060, 589, 419, 1237, 411, 267,
                                                  351, 5995, 2935, 651, 256, 415, 430, 256, 390};
  return counts;
}

const std::vector<double>& table1_average_tokens() {
  static const std::vector<double> avg = {81, 48, 51, 67, 80, 63, 74, 133, 53, 62, 42, 68, 37, 45, 76, 43, 44, 83};
  return avg;
}

SyntheticSpec table1_spec(double scale) {
  SyntheticSpec spec;
  spec.schema = LabelSchema::canonical();
  for (auto count : table1_counts()) {
    spec.n_per_class.push_back(
        std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(count) * scale))));
  }
  spec.average_tokens = table1_average_tokens();
  spec.vocabulary = make_pseudo_vocabulary(spec.schema.size(), 8, 400, kTable1VocabularySeed);
  return spec;
}

}  // namespace lawarea
