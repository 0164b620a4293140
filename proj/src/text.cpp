#include "carts/text.hpp"

#include <algorithm>
#include <cctype>

namespace carts::text {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

}  // namespace

std::size_t char_length(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(static_cast<unsigned char>(c))) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string trim(std::string_view s) {
    auto first = std::find_if_not(s.begin(), s.end(),
                                  [](char c) { return is_space(static_cast<unsigned char>(c)); });
    auto last = std::find_if_not(s.rbegin(), s.rend(),
                                 [](char c) { return is_space(static_cast<unsigned char>(c)); })
                    .base();
    if (first >= last) return {};
    return std::string(first, last);
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) {
        return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    });
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (is_word_byte(u)) {
            current.push_back(static_cast<char>(std::tolower(u)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool has_line_break(std::string_view s) {
    return s.find_first_of("\r\n") != std::string_view::npos;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    return std::equal(prefix.begin(), prefix.end(), s.begin(), [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) ==
               std::tolower(static_cast<unsigned char>(b));
    });
}

bool contains_delimited(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        const bool left_ok =
            pos == 0 || !is_word_byte(static_cast<unsigned char>(haystack[pos - 1]));
        const std::size_t end = pos + needle.size();
        const bool right_ok =
            end == haystack.size() || !is_word_byte(static_cast<unsigned char>(haystack[end]));
        if (left_ok && right_ok) return true;
        pos = haystack.find(needle, pos + 1);
    }
    return false;
}

}  // namespace carts::text
