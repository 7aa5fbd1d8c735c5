#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace simtrans::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

bool is_space(char32_t c);
bool is_punctuation(char32_t c);
bool is_symbol(char32_t c);
bool is_number(char32_t c);

/// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_words(std::string_view s);

/// Joins with single spaces.
std::string join_words(const std::vector<std::string>& words);

/// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// mteval-v14 "international" tokenization: punctuation is split off unless
/// it sits between digits, symbols are always split off.
std::string tokenize_intl(std::string_view line);

}  // namespace simtrans::text
