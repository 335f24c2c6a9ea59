#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/unicode.hpp"

namespace corpusforge::modifiers {

/// A set of code point ranges that noise characters are drawn from, uniformly over
/// all code points in the union.
class Charset {
 public:
  using Range = std::pair<char32_t, char32_t>;  // inclusive

  Charset() = default;
  explicit Charset(std::vector<Range> ranges) : ranges_(std::move(ranges)) {
    if (ranges_.empty()) throw ConfigError("charset must contain at least one range");
    for (const auto& [lo, hi] : ranges_) {
      if (lo > hi || hi > 0x10FFFF) throw ConfigError("invalid charset range");
      for (char32_t c = lo; c <= hi; ++c) {
        if (c < 0x20 || (c >= 0x7F && c < 0xA0) || (c >= 0xD800 && c <= 0xDFFF) || unicode::is_whitespace(c))
          throw ConfigError("charset ranges may not contain whitespace, control or surrogate code points");
      }
      total_ += static_cast<std::uint64_t>(hi - lo) + 1;
    }
  }

  /// Emoticons, pictographs, transport and supplemental symbols.
  static Charset emoji() {
    static const Charset c({{0x1F300, 0x1F5FF}, {0x1F600, 0x1F64F}, {0x1F680, 0x1F6C5}, {0x1F900, 0x1F9FF}});
    return c;
  }

  /// Letters from scripts rarely seen in European-language corpora.
  static Charset unicode_noise() {
    static const Charset c({{0x4E00, 0x9FFF},    // CJK unified ideographs
                            {0xAC00, 0xD7A3},    // Hangul syllables
                            {0x0905, 0x0939},    // Devanagari letters
                            {0x0E01, 0x0E2E},    // Thai consonants
                            {0x0621, 0x063A},    // Arabic letters
                            {0x10D0, 0x10FA},    // Georgian
                            {0x16A0, 0x16EA}});  // Runic
    return c;
  }

  /// Accepts a preset name ("emoji", "unicode") or a list of ranges, each either
  /// [lo, hi] integers or a "U+XXXX-U+YYYY" string.
  static Charset from_json(const nlohmann::json& j) {
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      if (name == "emoji") return emoji();
      if (name == "unicode" || name == "unicode_noise") return unicode_noise();
      throw ConfigError("unknown charset preset '" + name + "'");
    }
    if (!j.is_array()) throw ConfigError("charset must be a preset name or a list of ranges");
    std::vector<Range> ranges;
    for (const auto& r : j) {
      if (r.is_array() && r.size() == 2 && r[0].is_number_unsigned() && r[1].is_number_unsigned()) {
        ranges.emplace_back(r[0].get<std::uint32_t>(), r[1].get<std::uint32_t>());
      } else if (r.is_string()) {
        ranges.push_back(parse_range(r.get<std::string>()));
      } else {
        throw ConfigError("bad charset range " + r.dump());
      }
    }
    return Charset(std::move(ranges));
  }

  char32_t draw(Rng& rng) const {
    std::uint64_t k = rng.below(total_);
    for (const auto& [lo, hi] : ranges_) {
      const std::uint64_t size = static_cast<std::uint64_t>(hi - lo) + 1;
      if (k < size) return static_cast<char32_t>(lo + k);
      k -= size;
    }
    return ranges_.back().second;
  }

  bool contains(char32_t c) const {
    for (const auto& [lo, hi] : ranges_)
      if (c >= lo && c <= hi) return true;
    return false;
  }

  const std::vector<Range>& ranges() const noexcept { return ranges_; }

 private:
  static Range parse_range(const std::string& s) {
    auto parse_cp = [&](std::string t) -> char32_t {
      if (t.size() > 2 && (t[0] == 'U' || t[0] == 'u') && t[1] == '+') t = t.substr(2);
      try {
        return static_cast<char32_t>(std::stoul(t, nullptr, 16));
      } catch (const std::exception&) {
        throw ConfigError("bad code point '" + t + "' in charset range '" + s + "'");
      }
    };
    const auto dash = s.find('-');
    if (dash == std::string::npos) {
      const char32_t c = parse_cp(s);
      return {c, c};
    }
    return {parse_cp(s.substr(0, dash)), parse_cp(s.substr(dash + 1))};
  }

  std::vector<Range> ranges_;
  std::uint64_t total_ = 0;
};

}  // namespace corpusforge::modifiers
