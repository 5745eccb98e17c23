#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace entroprune {

// Minimal Unicode support for word segmentation: UTF-8 codec, simple
// case folding for Latin/Greek/Cyrillic, and the character classes the
// tokenizer splits on. Codepoints outside the covered scripts fold to
// themselves and count as word characters.

// Decodes the codepoint starting at byte offset `i` and advances `i`.
// Returns false on an invalid or truncated sequence (i is advanced past
// the offending byte so callers can substitute U+FFFD and continue).
bool utf8_next(std::string_view s, std::size_t &i, char32_t &cp);

// True iff `s` is well-formed UTF-8.
bool utf8_valid(std::string_view s);

void utf8_append(char32_t cp, std::string &out);

// Truncates to at most `max_cp` codepoints, never splitting a sequence.
std::string utf8_truncate(std::string_view s, std::size_t max_cp);

char32_t simple_case_fold(char32_t cp);

// Unicode White_Space property (full list).
bool is_whitespace(char32_t cp);

// Punctuation and symbol codepoints the tokenizer isolates into their
// own tokens. Covers ASCII, Latin-1, General Punctuation, currency and
// math symbols, CJK punctuation and fullwidth forms.
bool is_separator_symbol(char32_t cp);

} // namespace entroprune
