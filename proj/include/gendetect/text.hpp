#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <cstdint>

namespace gendetect::text {

// True if the byte sequence is well-formed UTF-8 (no overlong forms,
// surrogates, or codepoints above U+10FFFF).
bool is_valid_utf8(std::string_view s);

// Decodes UTF-8 into codepoints. Throws InputError on malformed input.
std::vector<char32_t> decode_utf8(std::string_view s);

// Appends the UTF-8 encoding of cp to out.
void append_utf8(std::string& out, char32_t cp);

std::size_t codepoint_count(std::string_view s);

// Character classes used by the tokenizer. The sets are fixed: ASCII plus
// the Latin-1 and Cyrillic ranges for case, the common typographic
// punctuation for punct, and the Unicode space list for whitespace.
bool is_space(char32_t cp);
bool is_punct(char32_t cp);
bool is_digit(char32_t cp);
char32_t to_lower(char32_t cp);
bool is_upper(char32_t cp);

// Strips leading/trailing whitespace (same set as is_space).
std::string_view trim(std::string_view s);

}  // namespace gendetect::text

namespace gendetect {

// Splits on whitespace with every punctuation character emitted as its own
// token; word tokens are lowercased. Deterministic; empty text gives an
// empty list.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace gendetect
