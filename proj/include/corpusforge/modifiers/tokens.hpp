#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpusforge/sentence_pair.hpp"

// Token-level editing helpers that keep the surrounding whitespace intact and keep
// alignments consistent with the edited text.
namespace corpusforge::modifiers {

/// Byte span [begin, end) of a whitespace-delimited token.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<TokenSpan> token_spans(std::string_view s) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_token_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_token_space(s[i])) ++i;
    if (i > start) out.push_back({start, i});
  }
  return out;
}

/// Replaces selected tokens; `replacements[k]` is (token index, new text), indices
/// strictly increasing.
inline std::string replace_tokens(std::string_view s, const std::vector<std::pair<std::size_t, std::string>>& replacements) {
  const auto spans = token_spans(s);
  std::string out;
  out.reserve(s.size() + 16);
  std::size_t cursor = 0;
  for (const auto& [index, text] : replacements) {
    const auto& span = spans.at(index);
    out.append(s.substr(cursor, span.begin - cursor));
    out += text;
    cursor = span.end;
  }
  out.append(s.substr(cursor));
  return out;
}

/// Inserts `token` as a new token right after token `index` (separated by a space).
inline std::string insert_after_token(std::string_view s, std::size_t index, std::string_view token) {
  const auto spans = token_spans(s);
  const std::size_t at = spans.at(index).end;
  std::string out;
  out.reserve(s.size() + token.size() + 1);
  out.append(s.substr(0, at));
  out.push_back(' ');
  out.append(token);
  out.append(s.substr(at));
  return out;
}

/// Links whose source token and target token each take part in exactly one link.
inline std::vector<AlignmentLink> bijective_links(const Alignment& alignment) {
  std::vector<std::uint32_t> src_deg, trg_deg;
  for (const auto& l : alignment) {
    if (l.src >= src_deg.size()) src_deg.resize(l.src + 1, 0);
    if (l.trg >= trg_deg.size()) trg_deg.resize(l.trg + 1, 0);
    ++src_deg[l.src];
    ++trg_deg[l.trg];
  }
  std::vector<AlignmentLink> out;
  for (const auto& l : alignment)
    if (src_deg[l.src] == 1 && trg_deg[l.trg] == 1) out.push_back(l);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace corpusforge::modifiers
