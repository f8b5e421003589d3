#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace spcgen::csv {

/// RFC 4180 field quoting: fields containing a comma, quote, or line break
/// are quoted with doubled quotes.
std::string quote(std::string_view field);

std::string format_row(const std::vector<std::string>& fields);

/// Parses comma-separated text with quoted fields (embedded newlines
/// allowed). A leading UTF-8 BOM is skipped; CRLF and LF both end records.
/// Throws Error(kInvalidArgument) on an unterminated quoted field.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace spcgen::csv
