#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace lawarea::utf8 {

/// Decodes one code point starting at `pos` and advances `pos`. Invalid
/// sequences decode as U+FFFD consuming a single byte.
char32_t next(std::string_view text, std::size_t& pos) noexcept;

void append(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp) noexcept;

/// ASCII punctuation (except '_') plus common Latin/general punctuation.
bool is_punctuation(char32_t cp) noexcept;

/// Lowercases ASCII, Latin-1 and Latin Extended-A letters; other code points pass through.
std::string to_lower(std::string_view text);

std::string strip_non_ascii(std::string_view text);

std::size_t length(std::string_view text) noexcept;

bool all_punctuation(std::string_view text) noexcept;

}  // namespace lawarea::utf8
