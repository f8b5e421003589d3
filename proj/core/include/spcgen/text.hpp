#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace spcgen::text {

std::string_view trim(std::string_view s);

/// Replaces every run of ASCII whitespace by a single space and trims.
std::string collapse_whitespace(std::string_view s);

/// Lowercases UTF-8 text. Covers ASCII, Latin-1, Latin Extended-A, Greek,
/// and Cyrillic; other code points pass through unchanged.
std::string to_lower(std::string_view s);

/// Lowercased word tokens: maximal runs of letters and digits, every other
/// code point is a separator. Invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view s);

bool iequals_ascii(std::string_view a, std::string_view b);

/// Appends the UTF-8 encoding of `cp`.
void append_utf8(std::string& out, char32_t cp);

/// Decodes one code point at `pos`, advancing it. Returns U+FFFD and
/// consumes one byte on malformed input.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

}  // namespace spcgen::text
