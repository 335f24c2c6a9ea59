#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpusforge/modifiers/charset.hpp"
#include "corpusforge/modifiers/tokens.hpp"
#include "corpusforge/modifiers/typos.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/sentence_pair.hpp"
#include "corpusforge/unicode.hpp"
#include "corpusforge/utf8.hpp"

namespace corpusforge::modifiers {

inline constexpr std::string_view kTargetTag = "__target__";
inline constexpr std::string_view kDoneTag = "__done__";
inline constexpr std::string_view kSourceTag = "__source__";  // reserved

inline bool gate(double p, Rng& rng) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return rng.uniform() < p;
}

inline SentencePair upper_case(SentencePair pair) {
  pair.src = unicode::to_upper(pair.src);
  pair.trg = unicode::to_upper(pair.trg);
  return pair;
}

inline SentencePair title_case(SentencePair pair) {
  pair.src = unicode::title_case(pair.src);
  pair.trg = unicode::title_case(pair.trg);
  return pair;
}

struct TypoParams {
  std::vector<TypoClass> classes{kAllTypoClasses.begin(), kAllTypoClasses.end()};
  double word_prob = 0.1;
  int max_per_word = 1;
  Keyboard keyboard = Keyboard::qwerty();
};

/// Source side only. Each eligible word is picked with `word_prob` and receives
/// between 1 and `max_per_word` typos.
inline SentencePair typos(SentencePair pair, const TypoParams& params, Rng& rng) {
  const auto spans = token_spans(pair.src);
  std::vector<std::pair<std::size_t, std::string>> edits;
  for (std::size_t t = 0; t < spans.size(); ++t) {
    auto word = utf8::decode(std::string_view(pair.src).substr(spans[t].begin, spans[t].end - spans[t].begin));
    if (!typo_eligible(word, params.classes, params.keyboard)) continue;
    if (!gate(params.word_prob, rng)) continue;
    const int count = params.max_per_word <= 1 ? 1 : static_cast<int>(rng.between(1, static_cast<std::uint64_t>(params.max_per_word)));
    for (int k = 0; k < count; ++k) {
      auto next = random_typo(word, params.classes, params.keyboard, rng);
      if (!next) break;
      word = std::move(*next);
    }
    edits.emplace_back(t, utf8::encode(word));
  }
  if (!edits.empty()) pair.src = replace_tokens(pair.src, edits);
  return pair;
}

/// Joins the pairs with single spaces; alignment links of each part are offset by
/// the token counts of the parts before it. The result carries an alignment only
/// when every part does.
inline SentencePair merge(std::span<const SentencePair> parts) {
  if (parts.size() < 2) throw std::invalid_argument("merge needs at least two pairs");
  SentencePair out;
  bool aligned = true;
  for (const auto& p : parts) aligned = aligned && p.alignment.has_value();
  if (aligned) out.alignment.emplace();
  std::uint32_t src_off = 0, trg_off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    if (k) {
      out.src.push_back(' ');
      out.trg.push_back(' ');
    }
    out.src += p.src;
    out.trg += p.trg;
    if (aligned)
      for (const auto& l : *p.alignment) out.alignment->push_back({l.src + src_off, l.trg + trg_off});
    src_off += static_cast<std::uint32_t>(token_count(p.src));
    trg_off += static_cast<std::uint32_t>(token_count(p.trg));
  }
  return out;
}

struct NoiseParams {
  std::size_t min_len = 1;
  std::size_t max_len = 12;
  std::size_t max_token_len = 5;
  Charset charset = Charset::unicode_noise();
};

/// Random text of min_len..max_len noise characters, split into tokens of
/// 1..max_token_len characters. Identical on both sides.
inline SentencePair noise_sentence(const NoiseParams& params, Rng& rng, bool with_alignment) {
  const std::size_t n = rng.between(params.min_len, params.max_len);
  std::string text;
  std::size_t tokens = 0;
  for (std::size_t done = 0; done < n;) {
    const std::size_t len = std::min<std::size_t>(n - done, rng.between(1, params.max_token_len));
    if (tokens++) text.push_back(' ');
    for (std::size_t c = 0; c < len; ++c) utf8::append(text, params.charset.draw(rng));
    done += len;
  }
  SentencePair out{text, text, std::nullopt};
  if (with_alignment) {
    out.alignment.emplace();
    for (std::uint32_t i = 0; i < tokens; ++i) out.alignment->push_back({i, i});
  }
  return out;
}

inline Charset default_inline_charset() {
  static const Charset c = [] {
    auto ranges = Charset::emoji().ranges();
    const auto more = Charset::unicode_noise().ranges();
    ranges.insert(ranges.end(), more.begin(), more.end());
    return Charset(std::move(ranges));
  }();
  return c;
}

struct InlineNoiseParams {
  Charset charset = default_inline_charset();
  std::size_t max_tokens = 3;  // upper bound on the noise token's length in characters
};

/// Inserts the same noise token after source token i and target token j of the
/// bijective link (i, j). Links past the insertion points move up by one and the
/// new tokens are linked to each other.
inline SentencePair insert_aligned_token(SentencePair pair, AlignmentLink at, std::string_view token) {
  pair.src = insert_after_token(pair.src, at.src, token);
  pair.trg = insert_after_token(pair.trg, at.trg, token);
  auto& links = *pair.alignment;
  for (auto& l : links) {
    if (l.src > at.src) ++l.src;
    if (l.trg > at.trg) ++l.trg;
  }
  links.push_back({at.src + 1, at.trg + 1});
  std::sort(links.begin(), links.end());
  return pair;
}

/// nullopt when the pair has no bijective link.
inline std::optional<SentencePair> inline_noise(const SentencePair& pair, const InlineNoiseParams& params, Rng& rng) {
  if (!pair.alignment || pair.alignment->empty()) return std::nullopt;
  const auto candidates = bijective_links(*pair.alignment);
  if (candidates.empty()) return std::nullopt;
  const auto at = candidates[rng.below(candidates.size())];
  const std::size_t len = rng.between(1, std::max<std::size_t>(1, params.max_tokens));
  std::string token;
  for (std::size_t c = 0; c < len; ++c) utf8::append(token, params.charset.draw(rng));
  return insert_aligned_token(pair, at, token);
}

/// Leading punctuation, core, trailing punctuation of a token.
struct PunctSplit {
  std::string_view lead, core, trail;
};

inline PunctSplit split_punct(std::string_view token) {
  const auto cps = utf8::decode(token);
  std::size_t b = 0, e = cps.size();
  while (b < e && unicode::is_punct(cps[b])) ++b;
  while (e > b && unicode::is_punct(cps[e - 1])) --e;
  std::size_t lead_bytes = 0, core_bytes = 0;
  for (std::size_t i = 0; i < b; ++i) lead_bytes += utf8::encode(std::u32string(1, cps[i])).size();
  for (std::size_t i = b; i < e; ++i) core_bytes += utf8::encode(std::u32string(1, cps[i])).size();
  return {token.substr(0, lead_bytes), token.substr(lead_bytes, core_bytes), token.substr(lead_bytes + core_bytes)};
}

/// Source tokens that can carry a hint: bijectively aligned, and both the source
/// and target token contain something besides punctuation.
inline std::vector<AlignmentLink> tag_candidates(const SentencePair& pair) {
  std::vector<AlignmentLink> out;
  if (!pair.alignment) return out;
  const auto src = tokenize(pair.src);
  const auto trg = tokenize(pair.trg);
  for (const auto& l : bijective_links(*pair.alignment)) {
    if (l.src >= src.size() || l.trg >= trg.size()) continue;
    if (split_punct(src[l.src]).core.empty() || split_punct(trg[l.trg]).core.empty()) continue;
    out.push_back(l);
  }
  return out;
}

/// Rewrites each selected source token s_i (aligned to t_j) as
/// `s_i __target__ t_j __done__`, processing left to right. Punctuation glued to
/// either token stays outside the hint, so "airport?" / "Flughafen?" becomes
/// "airport __target__ Flughafen __done__?". The three new source tokens link to j
/// and later source indices move up by three per injection.
inline SentencePair tags(const SentencePair& pair, double token_prob, Rng& rng) {
  const auto candidates = tag_candidates(pair);
  if (candidates.empty()) return pair;
  std::vector<AlignmentLink> chosen;
  for (const auto& l : candidates)
    if (gate(token_prob, rng)) chosen.push_back(l);
  if (chosen.empty()) return pair;

  const auto src_spans = token_spans(pair.src);
  const auto trg_tokens = tokenize(pair.trg);
  std::vector<std::pair<std::size_t, std::string>> edits;
  for (const auto& l : chosen) {
    const std::string_view s = std::string_view(pair.src).substr(src_spans[l.src].begin, src_spans[l.src].end - src_spans[l.src].begin);
    const auto ps = split_punct(s);
    const auto hint = split_punct(trg_tokens[l.trg]).core;
    std::string text;
    text.append(ps.lead).append(ps.core);
    text.push_back(' ');
    text.append(kTargetTag);
    text.push_back(' ');
    text.append(hint);
    text.push_back(' ');
    text.append(kDoneTag);
    text.append(ps.trail);
    edits.emplace_back(l.src, std::move(text));
  }

  SentencePair out = pair;
  out.src = replace_tokens(pair.src, edits);
  Alignment links;
  for (const auto& l : *pair.alignment) {
    std::uint32_t shift = 0;
    for (const auto& c : chosen)
      if (c.src < l.src) shift += 3;
    links.push_back({l.src + shift, l.trg});
  }
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const std::uint32_t base = chosen[k].src + static_cast<std::uint32_t>(3 * k);
    for (std::uint32_t d = 1; d <= 3; ++d) links.push_back({base + d, chosen[k].trg});
  }
  std::sort(links.begin(), links.end());
  out.alignment = std::move(links);
  return out;
}

}  // namespace corpusforge::modifiers
