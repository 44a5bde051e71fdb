#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lawarea {

struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source_id;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

enum class PartOfSpeech { Noun, Verb, Adv, Adj, Other };

PartOfSpeech parse_pos(std::string_view tag);  // throws InvalidArgument
std::string_view to_string(PartOfSpeech pos) noexcept;

inline constexpr std::string_view kUrlToken = "URL";
inline constexpr std::string_view kEmailToken = "EMAIL";
inline constexpr std::string_view kNumberToken = "0";
inline constexpr std::string_view kProperNameToken = "proper_name";

// Regexes recorded in bundle manifests; bump kRegexVersion when they change.
inline constexpr std::string_view kUrlPattern = R"(^(https?://|www\.)\S+$)";
inline constexpr std::string_view kEmailPattern = R"(^\S+@\S+\.\S+$)";
inline constexpr int kRegexVersion = 1;

/// Lexicon standing in for a statistical tagger and lemmatizer. All keys are
/// stored lowercased.
class Lexicon {
 public:
  Lexicon() = default;

  void add_lemma(std::string_view surface, std::string_view lemma);
  void add_pos(std::string_view surface, PartOfSpeech pos);
  void add_name(std::string_view name);

  /// Surface-form tag; falls back to the tag of surfaces whose normalized
  /// (lemmatized, ASCII-stripped) form equals `token`, so normalized output is
  /// re-tagged consistently. Unknown tokens are Other.
  PartOfSpeech pos(std::string_view token) const;
  /// Lemma, or the token itself when unknown.
  std::string lemma(std::string_view token) const;
  bool is_name(std::string_view token) const;

  const std::unordered_map<std::string, std::string>& lemma_map() const noexcept { return lemmas_; }
  const std::unordered_map<std::string, PartOfSpeech>& pos_map() const noexcept { return tags_; }
  const std::unordered_set<std::string>& name_registry() const noexcept { return names_; }

  /// Writes the three TSV files (lemmas.tsv, pos.tsv, names.tsv) into `dir`.
  void save(const std::filesystem::path& dir) const;

 private:
  using TagMap = std::unordered_map<std::string, PartOfSpeech>;
  std::shared_ptr<const TagMap> normalized_tags() const;

  std::unordered_map<std::string, std::string> lemmas_;
  std::unordered_map<std::string, PartOfSpeech> tags_;
  std::unordered_set<std::string> names_;
  // Derived lazily; reset by every mutation. Accessed through atomic_load/store
  // so concurrent const use is safe.
  mutable std::shared_ptr<const TagMap> normalized_;
};

/// Reads `surface<TAB>lemma`, `surface<TAB>POS` and `name` TSV files. Lines
/// starting with '#' and blank lines are skipped; duplicate surfaces keep the
/// last entry and emit a warning. A missing names path yields an empty registry.
Lexicon load_lexicon(const std::filesystem::path& lemma_path, const std::filesystem::path& pos_path,
                     const std::optional<std::filesystem::path>& names_path);

/// Convenience for a directory holding lemmas.tsv, pos.tsv and (optionally) names.tsv.
Lexicon load_lexicon_dir(const std::filesystem::path& dir);

enum class PipelineMode { Complete, Simple };

std::string_view to_string(PipelineMode mode) noexcept;
PipelineMode parse_pipeline_mode(std::string_view name);

struct PipelineConfig {
  PipelineMode mode = PipelineMode::Simple;
  std::optional<Lexicon> lexicon;  // required for Complete
};

/// Whitespace split, then every punctuation character becomes its own token.
TokenSequence tokenize(std::string_view text);

/// Tokenization, URL/EMAIL replacement, lowercasing, digit runs -> "0".
TokenSequence simple_pipeline(std::string_view text);

/// Tokenize, lowercase, drop punctuation, tag, numerals -> "0", names ->
/// proper_name, lemmatize, strip non-ASCII, keep nouns/verbs/adverbs/adjectives
/// (plus the "0" and proper_name tokens).
TokenSequence complete_pipeline(std::string_view text, const Lexicon& lexicon);

TokenSequence run_pipeline(const PipelineConfig& config, std::string_view text);

}  // namespace lawarea
