#include "lawarea/preprocess.hpp"

#include <fstream>
#include <regex>

#include "lawarea/error.hpp"
#include "lawarea/log.hpp"
#include "lawarea/utf8.hpp"

namespace lawarea {

PartOfSpeech parse_pos(std::string_view tag) {
  if (tag == "NOUN") return PartOfSpeech::Noun;
  if (tag == "VERB") return PartOfSpeech::Verb;
  if (tag == "ADV") return PartOfSpeech::Adv;
  if (tag == "ADJ") return PartOfSpeech::Adj;
  if (tag == "OTHER") return PartOfSpeech::Other;
  throw Error(ErrorCode::InvalidArgument, "unknown PoS tag '" + std::string(tag) + "'");
}

std::string_view to_string(PartOfSpeech pos) noexcept {
  switch (pos) {
    case PartOfSpeech::Noun: return "NOUN";
    case PartOfSpeech::Verb: return "VERB";
    case PartOfSpeech::Adv: return "ADV";
    case PartOfSpeech::Adj: return "ADJ";
    case PartOfSpeech::Other: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(PipelineMode mode) noexcept {
  return mode == PipelineMode::Complete ? "complete" : "simple";
}

PipelineMode parse_pipeline_mode(std::string_view name) {
  if (name == "complete") return PipelineMode::Complete;
  if (name == "simple") return PipelineMode::Simple;
  throw Error(ErrorCode::InvalidArgument, "unknown pipeline mode '" + std::string(name) + "'");
}

void Lexicon::add_lemma(std::string_view surface, std::string_view lemma) {
  lemmas_[utf8::to_lower(surface)] = utf8::to_lower(lemma);
  normalized_.reset();
}

void Lexicon::add_pos(std::string_view surface, PartOfSpeech pos) {
  tags_[utf8::to_lower(surface)] = pos;
  normalized_.reset();
}

void Lexicon::add_name(std::string_view name) { names_.insert(utf8::to_lower(name)); }

std::shared_ptr<const Lexicon::TagMap> Lexicon::normalized_tags() const {
  auto cached = std::atomic_load(&normalized_);
  if (cached) return cached;
  auto built = std::make_shared<TagMap>();
  for (const auto& [surface, tag] : tags_) {
    if (tag == PartOfSpeech::Other) continue;
    built->emplace(utf8::strip_non_ascii(lemma(surface)), tag);
  }
  std::shared_ptr<const TagMap> frozen = std::move(built);
  std::atomic_store(&normalized_, frozen);
  return frozen;
}

PartOfSpeech Lexicon::pos(std::string_view token) const {
  if (auto it = tags_.find(std::string(token)); it != tags_.end()) return it->second;
  const auto normalized = normalized_tags();
  if (auto it = normalized->find(std::string(token)); it != normalized->end()) return it->second;
  return PartOfSpeech::Other;
}

std::string Lexicon::lemma(std::string_view token) const {
  if (auto it = lemmas_.find(std::string(token)); it != lemmas_.end()) return it->second;
  return std::string(token);
}

bool Lexicon::is_name(std::string_view token) const { return names_.contains(std::string(token)); }

void Lexicon::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  // Sorted output keeps bundle hashes stable.
  std::vector<std::pair<std::string, std::string>> lemmas(lemmas_.begin(), lemmas_.end());
  std::sort(lemmas.begin(), lemmas.end());
  std::ofstream lemma_out(dir / "lemmas.tsv", std::ios::binary);
  for (const auto& [s, l] : lemmas) lemma_out << s << '\t' << l << '\n';

  std::vector<std::pair<std::string, PartOfSpeech>> tags(tags_.begin(), tags_.end());
  std::sort(tags.begin(), tags.end());
  std::ofstream pos_out(dir / "pos.tsv", std::ios::binary);
  for (const auto& [s, t] : tags) pos_out << s << '\t' << to_string(t) << '\n';

  std::vector<std::string> names(names_.begin(), names_.end());
  std::sort(names.begin(), names.end());
  std::ofstream name_out(dir / "names.tsv", std::ios::binary);
  for (const auto& n : names) name_out << n << '\n';
  if (!lemma_out || !pos_out || !name_out) throw Error(ErrorCode::IoError, "cannot write lexicon to " + dir.string());
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename OnFields>
void read_tsv(const std::filesystem::path& path, std::size_t expected_fields, OnFields&& on_fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    const bool ok = fields.size() == expected_fields &&
                    std::none_of(fields.begin(), fields.end(), [](const std::string& f) { return f.empty(); });
    if (!ok) throw Error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(line_no));
    on_fields(fields, line_no);
  }
}

}  // namespace

Lexicon load_lexicon(const std::filesystem::path& lemma_path, const std::filesystem::path& pos_path,
                     const std::optional<std::filesystem::path>& names_path) {
  Lexicon lexicon;
  std::unordered_set<std::string> seen;
  read_tsv(lemma_path, 2, [&](const std::vector<std::string>& f, std::size_t line_no) {
    if (!seen.insert(utf8::to_lower(f[0])).second) {
      warn("duplicate lemma entry '" + f[0] + "' at " + lemma_path.string() + ":" + std::to_string(line_no));
    }
    lexicon.add_lemma(f[0], f[1]);
  });
  seen.clear();
  read_tsv(pos_path, 2, [&](const std::vector<std::string>& f, std::size_t line_no) {
    PartOfSpeech tag;
    try {
      tag = parse_pos(f[1]);
    } catch (const Error&) {
      throw Error(ErrorCode::MalformedLine, pos_path.string() + ":" + std::to_string(line_no));
    }
    if (!seen.insert(utf8::to_lower(f[0])).second) {
      warn("duplicate PoS entry '" + f[0] + "' at " + pos_path.string() + ":" + std::to_string(line_no));
    }
    lexicon.add_pos(f[0], tag);
  });
  if (names_path && std::filesystem::exists(*names_path)) {
    read_tsv(*names_path, 1, [&](const std::vector<std::string>& f, std::size_t) { lexicon.add_name(f[0]); });
  }
  return lexicon;
}

Lexicon load_lexicon_dir(const std::filesystem::path& dir) {
  return load_lexicon(dir / "lemmas.tsv", dir / "pos.tsv", dir / "names.tsv");
}

namespace {

// Splits a whitespace-free chunk into runs of word characters and single punctuation characters.
void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::string word;
  for (std::size_t pos = 0; pos < chunk.size();) {
    const std::size_t start = pos;
    const char32_t cp = utf8::next(chunk, pos);
    if (utf8::is_punctuation(cp)) {
      if (!word.empty()) out.push_back(std::move(word));
      word.clear();
      out.emplace_back(chunk.substr(start, pos - start));
    } else {
      word.append(chunk.substr(start, pos - start));
    }
  }
  if (!word.empty()) out.push_back(std::move(word));
}

template <typename OnChunk>
void for_each_chunk(std::string_view text, OnChunk&& on_chunk) {
  std::size_t chunk_start = 0;
  bool in_chunk = false;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t start = pos;
    const char32_t cp = utf8::next(text, pos);
    if (utf8::is_whitespace(cp)) {
      if (in_chunk) on_chunk(text.substr(chunk_start, start - chunk_start));
      in_chunk = false;
    } else if (!in_chunk) {
      in_chunk = true;
      chunk_start = start;
    }
  }
  if (in_chunk) on_chunk(text.substr(chunk_start));
}

std::string normalize_digits(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  bool in_digits = false;
  for (char c : token) {
    if (c >= '0' && c <= '9') {
      if (!in_digits) out.push_back('0');
      in_digits = true;
    } else {
      out.push_back(c);
      in_digits = false;
    }
  }
  return out;
}

const std::regex& url_regex() {
  static const std::regex re(std::string(kUrlPattern), std::regex::icase);
  return re;
}

const std::regex& email_regex() {
  static const std::regex re{std::string(kEmailPattern)};
  return re;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  for_each_chunk(text, [&](std::string_view chunk) { split_chunk(chunk, seq.tokens); });
  return seq;
}

TokenSequence simple_pipeline(std::string_view text) {
  TokenSequence seq;
  std::vector<std::string> pieces;
  for_each_chunk(text, [&](std::string_view chunk) {
    const std::string s(chunk);
    // The replacement tokens are reserved, so the pipeline is idempotent on its output.
    if (chunk == kUrlToken || std::regex_match(s, url_regex())) {
      seq.tokens.emplace_back(kUrlToken);
      return;
    }
    if (chunk == kEmailToken || std::regex_match(s, email_regex())) {
      seq.tokens.emplace_back(kEmailToken);
      return;
    }
    pieces.clear();
    split_chunk(chunk, pieces);
    for (auto& p : pieces) seq.tokens.push_back(normalize_digits(utf8::to_lower(p)));
  });
  return seq;
}

TokenSequence complete_pipeline(std::string_view text, const Lexicon& lexicon) {
  struct Tagged {
    std::string token;
    PartOfSpeech pos;
  };
  std::vector<Tagged> tagged;
  for (auto& raw : tokenize(text).tokens) {
    std::string lowered = utf8::to_lower(raw);
    if (utf8::all_punctuation(lowered)) continue;
    const PartOfSpeech pos = lexicon.pos(lowered);
    tagged.push_back({std::move(lowered), pos});
  }

  TokenSequence seq;
  for (auto& [token, pos] : tagged) {
    std::string normalized = normalize_digits(token);
    if (normalized == kNumberToken) {
      seq.tokens.emplace_back(kNumberToken);
      continue;
    }
    if (normalized == kProperNameToken || lexicon.is_name(normalized)) {
      seq.tokens.emplace_back(kProperNameToken);
      continue;
    }
    std::string ascii = utf8::strip_non_ascii(lexicon.lemma(normalized));
    if (ascii.empty()) continue;
    if (pos == PartOfSpeech::Other) continue;
    seq.tokens.push_back(std::move(ascii));
  }
  return seq;
}

TokenSequence run_pipeline(const PipelineConfig& config, std::string_view text) {
  if (config.mode == PipelineMode::Simple) return simple_pipeline(text);
  if (!config.lexicon) throw Error(ErrorCode::LexiconMissing, "the complete pipeline needs a lexicon");
  return complete_pipeline(text, *config.lexicon);
}

}  // namespace lawarea
