#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/unicode.hpp"
#include "corpusforge/utf8.hpp"

namespace corpusforge::modifiers {

enum class TypoClass { Swap, Delete, Duplicate, NeighborKey, InsertNeighbor };

inline constexpr std::array<TypoClass, 5> kAllTypoClasses = {TypoClass::Swap, TypoClass::Delete, TypoClass::Duplicate,
                                                             TypoClass::NeighborKey, TypoClass::InsertNeighbor};

inline std::string_view to_string(TypoClass c) {
  switch (c) {
    case TypoClass::Swap: return "swap";
    case TypoClass::Delete: return "delete";
    case TypoClass::Duplicate: return "duplicate";
    case TypoClass::NeighborKey: return "neighbor";
    case TypoClass::InsertNeighbor: return "insert";
  }
  return "?";
}

inline TypoClass parse_typo_class(std::string_view s) {
  for (auto c : kAllTypoClasses)
    if (to_string(c) == s) return c;
  throw ConfigError("unknown typo class '" + std::string(s) + "' (expected swap, delete, duplicate, neighbor or insert)");
}

/// Lower-case key -> adjacent keys.
class Keyboard {
 public:
  Keyboard() = default;
  explicit Keyboard(std::map<char32_t, std::u32string> adjacency) : adj_(std::move(adjacency)) {}

  static const Keyboard& qwerty() {
    static const Keyboard kb = [] {
      const std::pair<char, const char*> rows[] = {
          {'q', "wa"},    {'w', "qeas"},  {'e', "wrsd"},  {'r', "etdf"},  {'t', "ryfg"},  {'y', "tugh"},
          {'u', "yihj"},  {'i', "uojk"},  {'o', "ipkl"},  {'p', "ol"},    {'a', "qwsz"},  {'s', "weadzx"},
          {'d', "erfsxc"}, {'f', "rtgdcv"}, {'g', "tyhfvb"}, {'h', "yujgbn"}, {'j', "uikhnm"}, {'k', "iojlm"},
          {'l', "opk"},   {'z', "asx"},   {'x', "zsdc"},  {'c', "xdfv"},  {'v', "cfgb"},  {'b', "vghn"},
          {'n', "bhjm"},  {'m', "njk"},
      };
      std::map<char32_t, std::u32string> adj;
      for (const auto& [k, v] : rows) {
        std::u32string n;
        for (const char* p = v; *p; ++p) n.push_back(static_cast<char32_t>(*p));
        adj[static_cast<char32_t>(k)] = n;
      }
      return Keyboard(std::move(adj));
    }();
    return kb;
  }

  /// Neighbors of `c`, matched case-insensitively; results follow the case of `c`.
  std::u32string neighbors(char32_t c) const {
    const char32_t lower = unicode::to_lower_char(c);
    const auto it = adj_.find(lower);
    if (it == adj_.end()) return {};
    if (lower == c) return it->second;
    std::u32string out;
    for (char32_t n : it->second) out.push_back(unicode::to_upper_char(n));
    return out;
  }

  bool has(char32_t c) const { return !neighbors(c).empty(); }

 private:
  std::map<char32_t, std::u32string> adj_;
};

/// Positions at which a typo of class `cls` can be made in `word`.
inline std::vector<std::size_t> typo_sites(const std::u32string& word, TypoClass cls, const Keyboard& kb) {
  std::vector<std::size_t> sites;
  if (word.size() < 2) return sites;
  for (std::size_t i = 0; i < word.size(); ++i) {
    switch (cls) {
      case TypoClass::Swap:
        if (i + 1 < word.size() && word[i] != word[i + 1]) sites.push_back(i);
        break;
      case TypoClass::Delete:
      case TypoClass::Duplicate:
        sites.push_back(i);
        break;
      case TypoClass::NeighborKey:
      case TypoClass::InsertNeighbor:
        if (kb.has(word[i])) sites.push_back(i);
        break;
    }
  }
  return sites;
}

/// Applies one typo of class `cls` at `index`. The neighbor-key classes draw the
/// replacement key from `rng`.
inline std::u32string typo_at(std::u32string word, TypoClass cls, std::size_t index, Rng* rng = nullptr,
                              const Keyboard& kb = Keyboard::qwerty()) {
  if (index >= word.size()) throw std::out_of_range("typo index past end of word");
  auto pick_neighbor = [&]() -> char32_t {
    const auto n = kb.neighbors(word[index]);
    if (n.empty()) throw std::invalid_argument("no keyboard neighbor for this character");
    return n[rng ? rng->below(n.size()) : 0];
  };
  switch (cls) {
    case TypoClass::Swap:
      if (index + 1 >= word.size()) throw std::out_of_range("swap needs a following character");
      std::swap(word[index], word[index + 1]);
      break;
    case TypoClass::Delete:
      word.erase(index, 1);
      break;
    case TypoClass::Duplicate:
      word.insert(word.begin() + static_cast<std::ptrdiff_t>(index), word[index]);
      break;
    case TypoClass::NeighborKey:
      word[index] = pick_neighbor();
      break;
    case TypoClass::InsertNeighbor:
      word.insert(word.begin() + static_cast<std::ptrdiff_t>(index) + 1, pick_neighbor());
      break;
  }
  return word;
}

inline std::string typo_at(std::string_view word, TypoClass cls, std::size_t index, Rng* rng = nullptr,
                           const Keyboard& kb = Keyboard::qwerty()) {
  return utf8::encode(typo_at(utf8::decode(word), cls, index, rng, kb));
}

/// A word can take a typo when it has at least two characters and one enabled
/// class has a site.
inline bool typo_eligible(const std::u32string& word, const std::vector<TypoClass>& classes, const Keyboard& kb) {
  if (word.size() < 2) return false;
  for (auto c : classes)
    if (!typo_sites(word, c, kb).empty()) return true;
  return false;
}

/// One typo: class uniform over the enabled classes that have a site, then site
/// uniform within that class. Returns nullopt if no class applies.
inline std::optional<std::u32string> random_typo(const std::u32string& word, const std::vector<TypoClass>& classes,
                                                 const Keyboard& kb, Rng& rng) {
  std::vector<std::pair<TypoClass, std::vector<std::size_t>>> usable;
  for (auto c : classes) {
    auto sites = typo_sites(word, c, kb);
    if (!sites.empty()) usable.emplace_back(c, std::move(sites));
  }
  if (usable.empty()) return std::nullopt;
  const auto& [cls, sites] = usable[rng.below(usable.size())];
  return typo_at(word, cls, sites[rng.below(sites.size())], &rng, kb);
}

}  // namespace corpusforge::modifiers
