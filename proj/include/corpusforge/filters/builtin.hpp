#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/filters/definition.hpp"
#include "corpusforge/sentence_pair.hpp"
#include "corpusforge/unicode.hpp"
#include "corpusforge/utf8.hpp"

// In-process filters. Every built-in is a pure function of (arguments, pair): it
// either returns the (possibly rewritten) pair or drops it. Lengths are counted in
// Unicode scalar values.
namespace corpusforge::filters {

/// Compiled filter: std::nullopt means "drop".
using RecordFilter = std::function<std::optional<SentencePair>(SentencePair)>;

struct BuiltinFilter {
  FilterDefinition definition;
  std::function<RecordFilter(const json& resolved_args)> compile;
};

namespace builtin_detail {

inline FilterParameter number_param(std::string name, double def, std::string help) {
  return FilterParameter{std::move(name), ParamType::Number, json(def), false, {}, std::move(help)};
}

inline FilterParameter string_param(std::string name, std::string def, std::string help) {
  return FilterParameter{std::move(name), ParamType::String, json(std::move(def)), false, {}, std::move(help)};
}

inline FilterDefinition builtin_def(std::string name, std::string description, std::vector<FilterParameter> params = {}) {
  FilterDefinition d;
  d.name = std::move(name);
  d.kind = FilterKind::Builtin;
  d.description = std::move(description);
  d.parameters = std::move(params);
  d.scope = FilterScope::Bilingual;
  return d;
}

inline bool blank(std::string_view s) {
  bool only_space = true;
  utf8::for_each(s, [&](char32_t c) {
    if (!unicode::is_whitespace(c)) only_space = false;
  });
  return only_space;
}

// Fraction of alphabetic scalars that belong to one of `scripts`; nullopt when the
// text has no letters at all.
inline std::optional<double> script_fraction(std::string_view s, const std::vector<UScriptCode>& scripts) {
  std::size_t letters = 0, matching = 0;
  utf8::for_each(s, [&](char32_t c) {
    if (!unicode::is_alpha(c)) return;
    ++letters;
    if (std::find(scripts.begin(), scripts.end(), unicode::script_of(c)) != scripts.end()) ++matching;
  });
  if (letters == 0) return std::nullopt;
  return static_cast<double>(matching) / static_cast<double>(letters);
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_token_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

inline constexpr std::array<char32_t, 7> kTerminalMarks = {U'.', U'!', U'?', U'…', U'。', U'！', U'？'};

inline bool is_terminal_mark(char32_t c) {
  return std::find(kTerminalMarks.begin(), kTerminalMarks.end(), c) != kTerminalMarks.end();
}

inline std::string_view rtrim(std::string_view s) {
  while (!s.empty() && is_token_space(s.back())) s.remove_suffix(1);
  return s;
}

// Last scalar of s and the byte offset where it starts.
inline std::optional<std::pair<char32_t, std::size_t>> last_scalar(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t start = s.size() - 1;
  while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
  std::size_t i = start;
  return std::make_pair(utf8::detail::next(s, i), start);
}

inline SentencePair fix_terminal_punctuation(SentencePair pair) {
  const auto src = rtrim(pair.src);
  const auto trg = rtrim(pair.trg);
  const auto s_last = last_scalar(src);
  const auto t_last = last_scalar(trg);
  if (!s_last || !t_last) return pair;
  const bool s_mark = is_terminal_mark(s_last->first);
  const bool t_mark = is_terminal_mark(t_last->first);
  if (s_mark && !t_mark) {
    pair.trg = std::string(trg) + std::string(src.substr(s_last->second));
  } else if (!s_mark && t_mark) {
    const std::size_t tokens_before = token_count(trg);
    std::string trimmed(rtrim(trg.substr(0, t_last->second)));
    const std::size_t tokens_after = token_count(trimmed);
    if (tokens_after < tokens_before && pair.alignment) {
      // The mark was a token of its own; links to it go away with it.
      const auto gone = static_cast<std::uint32_t>(tokens_after);
      std::erase_if(*pair.alignment, [&](const AlignmentLink& l) { return l.trg >= gone; });
    }
    pair.trg = std::move(trimmed);
  }
  return pair;
}

struct NamedEntity {
  std::string_view name;
  char32_t cp;
};

inline constexpr NamedEntity kEntities[] = {
    {"amp", U'&'},       {"lt", U'<'},         {"gt", U'>'},         {"quot", U'"'},       {"apos", U'\''},
    {"nbsp", U'\u00A0'}, {"ndash", U'–'}, {"mdash", U'—'}, {"hellip", U'…'}, {"laquo", U'«'},
    {"raquo", U'»'}, {"lsquo", U'‘'}, {"rsquo", U'’'}, {"ldquo", U'“'}, {"rdquo", U'”'},
    {"euro", U'€'}, {"copy", U'©'},  {"reg", U'®'},   {"deg", U'°'},   {"shy", U'\u00AD'},
};

/// Decodes HTML character references. References that would decode to whitespace or
/// control characters are left as-is so token boundaries never move.
inline std::string deescape_html(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    const auto body = s.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (body.size() > 1 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const auto digits = body.substr(hex ? 2 : 1);
      std::uint32_t v = 0;
      const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), v, hex ? 16 : 10);
      if (!digits.empty() && r.ec == std::errc() && r.ptr == digits.data() + digits.size()) cp = v;
    } else {
      for (const auto& e : kEntities)
        if (e.name == body) cp = e.cp;
    }
    const bool usable = cp && *cp >= 0x20 && *cp != 0x7F && *cp <= 0x10FFFF && !(*cp >= 0xD800 && *cp <= 0xDFFF) &&
                        !(*cp >= 0x80 && *cp < 0xA0);
    if (!usable) {
      out.push_back(s[i++]);
      continue;
    }
    if (*cp == U'\x20') {
      out.append(s.substr(i, semi - i + 1));
    } else {
      utf8::append(out, *cp);
    }
    i = semi + 1;
  }
  return out;
}

inline std::vector<BuiltinFilter> make_builtins() {
  std::vector<BuiltinFilter> v;

  v.push_back({builtin_def("max_length", "Drop pairs where either side is longer than max_length characters.",
                           {number_param("max_length", 150, "Maximum characters per side")}),
               [](const json& a) -> RecordFilter {
                 const double limit = a.at("max_length").get<double>();
                 return [limit](SentencePair p) -> std::optional<SentencePair> {
                   if (static_cast<double>(utf8::length(p.src)) > limit || static_cast<double>(utf8::length(p.trg)) > limit)
                     return std::nullopt;
                   return p;
                 };
               }});

  v.push_back({builtin_def("length_ratio", "Drop pairs whose longer side exceeds ratio times the shorter side (in characters).",
                           {number_param("ratio", 2.0, "Maximum length ratio")}),
               [](const json& a) -> RecordFilter {
                 const double ratio = a.at("ratio").get<double>();
                 return [ratio](SentencePair p) -> std::optional<SentencePair> {
                   const auto ls = static_cast<double>(utf8::length(p.src));
                   const auto lt = static_cast<double>(utf8::length(p.trg));
                   const double lo = std::min(ls, lt), hi = std::max(ls, lt);
                   if (hi == 0) return p;
                   if (lo == 0 || hi / lo > ratio) return std::nullopt;
                   return p;
                 };
               }});

  v.push_back({builtin_def("empty_side", "Drop pairs where either side is empty or whitespace only."),
               [](const json&) -> RecordFilter {
                 return [](SentencePair p) -> std::optional<SentencePair> {
                   if (blank(p.src) || blank(p.trg)) return std::nullopt;
                   return p;
                 };
               }});

  v.push_back({builtin_def("script_heuristic_langid",
                           "Drop pairs where less than `threshold` of the letters on a side belong to the expected "
                           "script(s). Scripts are Unicode names, comma-separated (\"Latin\", \"Han,Hiragana,Katakana\"); "
                           "an empty value skips that side. Sides without letters are kept.",
                           {string_param("src_script", "Latin", "Expected source script(s)"),
                            string_param("trg_script", "Latin", "Expected target script(s)"),
                            number_param("threshold", 0.5, "Minimum fraction of letters in the expected script")}),
               [](const json& a) -> RecordFilter {
                 const auto src_scripts = unicode::parse_script_list(a.at("src_script").get<std::string>());
                 const auto trg_scripts = unicode::parse_script_list(a.at("trg_script").get<std::string>());
                 const double threshold = a.at("threshold").get<double>();
                 return [=](SentencePair p) -> std::optional<SentencePair> {
                   auto fails = [&](const std::string& text, const std::vector<UScriptCode>& scripts) {
                     if (scripts.empty()) return false;
                     const auto f = script_fraction(text, scripts);
                     return f && *f < threshold;
                   };
                   if (fails(p.src, src_scripts) || fails(p.trg, trg_scripts)) return std::nullopt;
                   return p;
                 };
               }});

  v.push_back({builtin_def("normalize_whitespace", "Collapse runs of whitespace to one space and trim both sides."),
               [](const json&) -> RecordFilter {
                 return [](SentencePair p) -> std::optional<SentencePair> {
                   p.src = collapse_whitespace(p.src);
                   p.trg = collapse_whitespace(p.trg);
                   return p;
                 };
               }});

  v.push_back({builtin_def("fix_terminal_punctuation",
                           "If the source ends in sentence-final punctuation and the target does not, append the "
                           "source's mark to the target; if only the target ends in one, remove it."),
               [](const json&) -> RecordFilter {
                 return [](SentencePair p) -> std::optional<SentencePair> { return fix_terminal_punctuation(std::move(p)); };
               }});

  v.push_back({builtin_def("deescape_html", "Decode HTML character references (&amp;, &#39;, &#x2014; ...)."),
               [](const json&) -> RecordFilter {
                 return [](SentencePair p) -> std::optional<SentencePair> {
                   p.src = deescape_html(p.src);
                   p.trg = deescape_html(p.trg);
                   return p;
                 };
               }});
  return v;
}

}  // namespace builtin_detail

inline const std::vector<BuiltinFilter>& builtin_filters() {
  static const std::vector<BuiltinFilter> filters = builtin_detail::make_builtins();
  return filters;
}

inline const BuiltinFilter* find_builtin(std::string_view name) {
  for (const auto& f : builtin_filters())
    if (f.definition.name == name) return &f;
  return nullptr;
}

/// Compiles a built-in with the given arguments (defaults filled in).
inline RecordFilter compile_builtin(std::string_view name, const json& args) {
  const BuiltinFilter* f = find_builtin(name);
  if (!f) throw ConfigError("unknown built-in filter '" + std::string(name) + "'");
  return f->compile(resolve_arguments(f->definition, args));
}

/// One-shot application; std::nullopt means the pair is dropped.
inline std::optional<SentencePair> apply_builtin_filter(std::string_view name, const json& args, SentencePair pair) {
  return compile_builtin(name, args)(std::move(pair));
}

}  // namespace corpusforge::filters
