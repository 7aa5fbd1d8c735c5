#include "simtrans/text.hpp"

#include <algorithm>
#include <cstdint>
#include <span>

namespace simtrans::text {
namespace {

struct CodepointRange {
  char32_t first;
  char32_t last;
};

#include "unicode_tables.inc"

bool in_table(std::span<const CodepointRange> table, char32_t c) {
  auto it = std::upper_bound(table.begin(), table.end(), c,
                             [](char32_t v, const CodepointRange& r) { return v < r.first; });
  if (it == table.begin()) return false;
  --it;
  return c <= it->last;
}

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_space(char32_t c) { return in_table(kWhitespace, c); }
bool is_punctuation(char32_t c) { return in_table(kPunctuation, c); }
bool is_symbol(char32_t c) { return in_table(kSymbol, c); }
bool is_number(char32_t c) { return in_table(kNumber, c); }

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  // ASCII fast path covers the common case without decoding.
  const bool ascii = std::all_of(s.begin(), s.end(),
                                 [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  if (ascii) {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
      std::size_t j = i;
      while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
      if (j > i) words.emplace_back(s.substr(i, j - i));
      i = j;
    }
    return words;
  }
  const std::u32string cps = decode_utf8(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !is_space(cps[j])) ++j;
    if (j > i) words.push_back(encode_utf8(std::u32string_view(cps).substr(i, j - i)));
    i = j;
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::string normalize_whitespace(std::string_view s) { return join_words(split_words(s)); }

std::string tokenize_intl(std::string_view line) {
  std::u32string in = decode_utf8(line);

  // Each pass mirrors a left-to-right, non-overlapping regex substitution.
  std::u32string pass1;
  pass1.reserve(in.size() * 2);
  for (std::size_t i = 0; i < in.size();) {
    if (i + 1 < in.size() && !is_number(in[i]) && is_punctuation(in[i + 1])) {
      pass1 += in[i];
      pass1 += U' ';
      pass1 += in[i + 1];
      pass1 += U' ';
      i += 2;
    } else {
      pass1 += in[i++];
    }
  }

  std::u32string pass2;
  pass2.reserve(pass1.size() * 2);
  for (std::size_t i = 0; i < pass1.size();) {
    if (i + 1 < pass1.size() && is_punctuation(pass1[i]) && !is_number(pass1[i + 1])) {
      pass2 += U' ';
      pass2 += pass1[i];
      pass2 += U' ';
      pass2 += pass1[i + 1];
      i += 2;
    } else {
      pass2 += pass1[i++];
    }
  }

  std::u32string pass3;
  pass3.reserve(pass2.size() * 2);
  for (char32_t c : pass2) {
    if (is_symbol(c)) {
      pass3 += U' ';
      pass3 += c;
      pass3 += U' ';
    } else {
      pass3 += c;
    }
  }
  return normalize_whitespace(encode_utf8(pass3));
}

}  // namespace simtrans::text
