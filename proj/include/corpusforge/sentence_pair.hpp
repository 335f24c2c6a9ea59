#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge {

/// Source token `src` is a translation of target token `trg`.
struct AlignmentLink {
  std::uint32_t src = 0;
  std::uint32_t trg = 0;
  friend auto operator<=>(const AlignmentLink&, const AlignmentLink&) = default;
};

using Alignment = std::vector<AlignmentLink>;

/// One line of parallel data. Tokens are runs of non-whitespace; alignment links
/// index those tokens.
struct SentencePair {
  std::string src;
  std::string trg;
  std::optional<Alignment> alignment;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

constexpr bool is_token_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f' || c == '\n';
}

inline std::vector<std::string_view> tokenize(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_token_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_token_space(s[i])) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

inline std::size_t token_count(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : s) {
    const bool space = is_token_space(c);
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Parses Pharaoh format: space-separated "i-j" pairs.
inline Alignment parse_alignment(std::string_view text) {
  Alignment out;
  for (std::string_view tok : tokenize(text)) {
    const auto dash = tok.find('-');
    if (dash == std::string_view::npos) throw FormatError("bad alignment link '" + std::string(tok) + "'");
    AlignmentLink link;
    const auto a = tok.substr(0, dash);
    const auto b = tok.substr(dash + 1);
    const auto r1 = std::from_chars(a.data(), a.data() + a.size(), link.src);
    const auto r2 = std::from_chars(b.data(), b.data() + b.size(), link.trg);
    if (a.empty() || b.empty() || r1.ec != std::errc() || r1.ptr != a.data() + a.size() ||
        r2.ec != std::errc() || r2.ptr != b.data() + b.size())
      throw FormatError("bad alignment link '" + std::string(tok) + "'");
    out.push_back(link);
  }
  return out;
}

inline std::string format_alignment(const Alignment& alignment) {
  std::string out;
  for (const auto& link : alignment) {
    if (!out.empty()) out.push_back(' ');
    out += std::to_string(link.src);
    out.push_back('-');
    out += std::to_string(link.trg);
  }
  return out;
}

/// Every link indexes an existing token on both sides.
inline bool alignment_in_bounds(const SentencePair& pair) {
  if (!pair.alignment) return true;
  const auto ns = token_count(pair.src);
  const auto nt = token_count(pair.trg);
  for (const auto& link : *pair.alignment)
    if (link.src >= ns || link.trg >= nt) return false;
  return true;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

/// Parses one TSV record. `num_fields` is 2 or 3; 0 accepts either.
/// When num_fields is 2 a trailing alignment column is tolerated and kept.
inline SentencePair parse_tsv(std::string_view line, int num_fields = 0) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split_fields(line);
  if (fields.size() < 2 || fields.size() > 3)
    throw FormatError("expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()));
  if (num_fields == 3 && fields.size() != 3)
    throw FormatError("expected an alignment column (3 fields), got " + std::to_string(fields.size()));
  SentencePair pair{std::string(fields[0]), std::string(fields[1]), std::nullopt};
  if (fields.size() == 3) {
    pair.alignment = parse_alignment(fields[2]);
    if (!alignment_in_bounds(pair)) throw FormatError("alignment link out of token bounds");
  }
  return pair;
}

/// Formats a record. With num_fields == 2 any alignment is omitted; with 3 an absent
/// alignment is written as an empty column.
inline std::string format_tsv(const SentencePair& pair, int num_fields = 0) {
  std::string out;
  out.reserve(pair.src.size() + pair.trg.size() + 2);
  out += pair.src;
  out.push_back('\t');
  out += pair.trg;
  if (num_fields == 3 || (num_fields == 0 && pair.alignment)) {
    out.push_back('\t');
    if (pair.alignment) out += format_alignment(*pair.alignment);
  }
  return out;
}

}  // namespace corpusforge
