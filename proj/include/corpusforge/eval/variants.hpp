#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/modifiers/ops.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/sentence_pair.hpp"

namespace corpusforge::eval {

enum class VariantKind { Plain, TitleCase, AllCaps, Typo4, Emoji, UnicodeNoise };

inline std::string_view to_string(VariantKind k) {
  switch (k) {
    case VariantKind::Plain: return "plain";
    case VariantKind::TitleCase: return "title_case";
    case VariantKind::AllCaps: return "all_caps";
    case VariantKind::Typo4: return "typo4";
    case VariantKind::Emoji: return "emoji";
    case VariantKind::UnicodeNoise: return "unicode_noise";
  }
  return "?";
}

inline VariantKind parse_variant_kind(std::string_view s) {
  for (auto k : {VariantKind::Plain, VariantKind::TitleCase, VariantKind::AllCaps, VariantKind::Typo4, VariantKind::Emoji,
                 VariantKind::UnicodeNoise})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown test-set kind '" + std::string(s) +
                    "' (expected plain, title_case, all_caps, typo4, emoji or unicode_noise; url sets are built with --scores)");
}

inline constexpr std::size_t kTypo4Count = 4;

/// Picks min(4, eligible words) distinct source words and gives each one typo.
/// Returns the new source and the number of words changed.
inline std::pair<std::string, std::size_t> insert_typos(std::string_view src, std::size_t count, Rng& rng) {
  using namespace modifiers;
  const std::vector<TypoClass> classes(kAllTypoClasses.begin(), kAllTypoClasses.end());
  const auto& kb = Keyboard::qwerty();
  const auto spans = token_spans(src);
  std::vector<std::size_t> eligible;
  std::vector<std::u32string> words(spans.size());
  for (std::size_t t = 0; t < spans.size(); ++t) {
    words[t] = utf8::decode(src.substr(spans[t].begin, spans[t].end - spans[t].begin));
    if (typo_eligible(words[t], classes, kb)) eligible.push_back(t);
  }
  const std::size_t n = std::min(count, eligible.size());
  for (std::size_t i = 0; i < n; ++i) std::swap(eligible[i], eligible[i + rng.below(eligible.size() - i)]);
  eligible.resize(n);
  std::sort(eligible.begin(), eligible.end());
  std::vector<std::pair<std::size_t, std::string>> edits;
  for (auto t : eligible) edits.emplace_back(t, utf8::encode(*random_typo(words[t], classes, kb, rng)));
  return {replace_tokens(src, edits), n};
}

/// Builds a robustness variant of a test set. Line i draws from
/// seed/kind/i, so a variant does not depend on the lines around it.
inline std::vector<SentencePair> make_variant(const std::vector<SentencePair>& base, VariantKind kind, std::uint64_t seed) {
  std::vector<SentencePair> out;
  out.reserve(base.size());
  const Rng root = Rng::from_seed(seed).derive(to_string(kind));
  modifiers::InlineNoiseParams noise;
  if (kind == VariantKind::Emoji) noise.charset = modifiers::Charset::emoji();
  if (kind == VariantKind::UnicodeNoise) noise.charset = modifiers::Charset::unicode_noise();
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& p = base[i];
    Rng r = root.derive(static_cast<std::uint64_t>(i));
    switch (kind) {
      case VariantKind::Plain:
        out.push_back(p);
        break;
      case VariantKind::TitleCase:
        out.push_back(modifiers::title_case(p));
        break;
      case VariantKind::AllCaps:
        out.push_back(modifiers::upper_case(p));
        break;
      case VariantKind::Typo4: {
        SentencePair q = p;
        q.src = insert_typos(p.src, kTypo4Count, r).first;
        out.push_back(std::move(q));
        break;
      }
      case VariantKind::Emoji:
      case VariantKind::UnicodeNoise: {
        if (!p.alignment)
          throw FormatError("test-set kind " + std::string(to_string(kind)) + " needs word alignments (third column)", i + 1);
        auto q = modifiers::inline_noise(p, noise, r);
        out.push_back(q ? std::move(*q) : p);
        break;
      }
    }
  }
  return out;
}

}  // namespace corpusforge::eval
