#pragma once

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>

#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/sentence_pair.hpp"
#include "corpusforge/utf8.hpp"

// Thin wrappers over ICU for full (possibly length-changing) case mapping and script
// lookup.
namespace corpusforge::unicode {

namespace detail {

inline icu::UnicodeString to_icu(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

inline std::string from_icu(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace detail

/// Full uppercase mapping, root locale ("straße" -> "STRASSE").
inline std::string to_upper(std::string_view s) {
  auto u = detail::to_icu(s);
  u.toUpper(icu::Locale::getRoot());
  return detail::from_icu(u);
}

inline std::string to_lower(std::string_view s) {
  auto u = detail::to_icu(s);
  u.toLower(icu::Locale::getRoot());
  return detail::from_icu(u);
}

/// Full case folding; two strings that differ only in case fold to the same text.
inline std::string case_fold(std::string_view s) {
  auto u = detail::to_icu(s);
  u.foldCase();
  return detail::from_icu(u);
}

inline bool is_cased(char32_t c) { return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_CASED); }
inline bool is_alpha(char32_t c) { return u_isUAlphabetic(static_cast<UChar32>(c)); }
inline bool is_whitespace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }
inline bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }
inline char32_t to_lower_char(char32_t c) { return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c))); }
inline char32_t to_upper_char(char32_t c) { return static_cast<char32_t>(u_toupper(static_cast<UChar32>(c))); }

/// Titlecase form of a single scalar (may expand, e.g. U+00DF -> "Ss").
inline std::string title_char(char32_t c) {
  icu::UnicodeString u(static_cast<UChar32>(c));
  u.toTitle(nullptr, icu::Locale::getRoot(), U_TITLECASE_NO_LOWERCASE | U_TITLECASE_NO_BREAK_ADJUSTMENT);
  return detail::from_icu(u);
}

/// Capitalises the first cased letter of every whitespace-delimited token; every
/// other character is left untouched.
inline std::string title_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool at_token_start = true;  // no cased letter seen yet in the current token
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t begin = i;
    const char32_t c = utf8::detail::next(s, i);
    if (c < 0x80 && is_token_space(static_cast<char>(c))) {
      at_token_start = true;
      out.push_back(static_cast<char>(c));
      continue;
    }
    if (at_token_start && is_cased(c)) {
      out += title_char(c);
      at_token_start = false;
      continue;
    }
    out.append(s.substr(begin, i - begin));
  }
  return out;
}

/// Resolves a script name ("Latin", "Cyrl", "Han") to its ICU code.
inline UScriptCode script_code(std::string_view name) {
  const std::string n(name);
  const int32_t v = u_getPropertyValueEnum(UCHAR_SCRIPT, n.c_str());
  if (v == UCHAR_INVALID_CODE) throw ConfigError("unknown Unicode script '" + n + "'");
  return static_cast<UScriptCode>(v);
}

inline UScriptCode script_of(char32_t c) {
  UErrorCode err = U_ZERO_ERROR;
  const UScriptCode code = uscript_getScript(static_cast<UChar32>(c), &err);
  return U_FAILURE(err) ? USCRIPT_INVALID_CODE : code;
}

/// Parses a comma-separated script list such as "Han,Hiragana,Katakana".
inline std::vector<UScriptCode> parse_script_list(std::string_view text) {
  std::vector<UScriptCode> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(script_code(item));
    start = comma + 1;
  }
  return out;
}

}  // namespace corpusforge::unicode
