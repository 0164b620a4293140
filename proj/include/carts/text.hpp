#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace carts::text {

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t char_length(std::string_view s);

/// Number of whitespace-separated tokens.
std::size_t word_count(std::string_view s);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Lowercases and splits on ASCII non-alphanumeric bytes. Bytes >= 0x80 stay
/// inside tokens so multi-byte UTF-8 letters are never split.
std::vector<std::string> tokenize(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool has_line_break(std::string_view s);

bool iequals_prefix(std::string_view s, std::string_view prefix);

/// True when `needle` occurs in `haystack` delimited by non-alphanumerics
/// (or the string boundary) on both sides.
bool contains_delimited(std::string_view haystack, std::string_view needle);

}  // namespace carts::text
