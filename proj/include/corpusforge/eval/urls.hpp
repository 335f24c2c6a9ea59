#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/sentence_pair.hpp"

// URL grammar used by every function here:
//   start   an ASCII case-insensitive "http://" or "https://" that is not preceded
//           by an ASCII letter or digit;
//   body    the maximal run of non-whitespace bytes after it;
//   trim    characters from the set  . , ; : ! ? ) ] } > " '  are removed from the
//           end repeatedly;
//   a match whose body is empty after trimming is not a URL.
namespace corpusforge::eval {

struct UrlSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

namespace detail {

inline bool ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline bool starts_with_ci(std::string_view s, std::size_t at, std::string_view prefix) {
  if (s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[at + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

inline bool url_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace detail

inline std::vector<UrlSpan> find_urls(std::string_view s) {
  static constexpr std::string_view kTrim = ".,;:!?)]}>\"'";
  std::vector<UrlSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t scheme = 0;
    if (detail::starts_with_ci(s, i, "https://"))
      scheme = 8;
    else if (detail::starts_with_ci(s, i, "http://"))
      scheme = 7;
    if (scheme == 0 || (i > 0 && detail::ascii_alnum(s[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t end = i + scheme;
    while (end < s.size() && !detail::url_space(s[end])) ++end;
    std::size_t trimmed = end;
    while (trimmed > i + scheme && kTrim.find(s[trimmed - 1]) != std::string_view::npos) --trimmed;
    if (trimmed > i + scheme) out.push_back({i, trimmed});
    i = end;
  }
  return out;
}

inline std::vector<std::string> extract_urls(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& u : find_urls(s)) out.emplace_back(s.substr(u.begin, u.end - u.begin));
  return out;
}

/// Text with its URLs cut out, plus what is needed to put them back.
struct StrippedText {
  std::string text;
  std::vector<std::pair<std::size_t, std::string>> urls;  // offset in `text`, URL
};

inline StrippedText strip_urls(std::string_view s) {
  StrippedText out;
  std::size_t cursor = 0;
  for (const auto& u : find_urls(s)) {
    out.text.append(s.substr(cursor, u.begin - cursor));
    out.urls.emplace_back(out.text.size(), std::string(s.substr(u.begin, u.end - u.begin)));
    cursor = u.end;
  }
  out.text.append(s.substr(cursor));
  return out;
}

inline std::string reinsert_urls(const StrippedText& t) {
  std::string out;
  std::size_t cursor = 0;
  for (const auto& [at, url] : t.urls) {
    out.append(t.text, cursor, at - cursor);
    out += url;
    cursor = at;
  }
  out.append(t.text, cursor, std::string::npos);
  return out;
}

/// Percentage of reference URLs found byte-identically in the hypothesis of the
/// same line, counting multiplicity. 0 when the references hold no URL.
inline double url_exact_match(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  if (hyps.size() != refs.size())
    throw Error("hypothesis and reference counts differ (" + std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()) + ")");
  std::uint64_t total = 0, matched = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    std::map<std::string, std::uint64_t> available;
    for (auto& u : extract_urls(hyps[i])) ++available[u];
    for (auto& u : extract_urls(refs[i])) {
      ++total;
      auto it = available.find(u);
      if (it != available.end() && it->second > 0) {
        --it->second;
        ++matched;
      }
    }
  }
  return total ? 100.0 * static_cast<double>(matched) / static_cast<double>(total) : 0.0;
}

struct ScoredPair {
  SentencePair pair;
  double score = 0.0;
};

struct UrlRejection {
  std::size_t index = 0;  // position in the input
  std::string reason;
};

struct UrlTestSet {
  std::vector<SentencePair> pairs;
  std::vector<UrlRejection> rejected;
};

/// Keeps pairs whose source and target carry the same non-empty multiset of URLs,
/// ranks them by score (descending, input order on ties) and returns the top `k`.
/// URLs are cut out while ranking and put back at their original offsets.
inline UrlTestSet build_url_testset(const std::vector<ScoredPair>& scored, std::size_t k = 1500) {
  struct Candidate {
    std::size_t index;
    double score;
    StrippedText src, trg;
    std::optional<Alignment> alignment;
  };
  UrlTestSet out;
  std::vector<Candidate> keep;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto& sp = scored[i];
    if (!std::isfinite(sp.score)) {
      out.rejected.push_back({i, "score is not finite"});
      continue;
    }
    auto su = extract_urls(sp.pair.src);
    auto tu = extract_urls(sp.pair.trg);
    if (su.empty() && tu.empty()) {
      out.rejected.push_back({i, "no URL on either side"});
      continue;
    }
    std::sort(su.begin(), su.end());
    std::sort(tu.begin(), tu.end());
    if (su != tu) {
      out.rejected.push_back({i, "source has " + std::to_string(su.size()) + " URL(s), target has " +
                                     std::to_string(tu.size()) + ", and they differ"});
      continue;
    }
    keep.push_back({i, sp.score, strip_urls(sp.pair.src), strip_urls(sp.pair.trg), sp.pair.alignment});
  }
  std::stable_sort(keep.begin(), keep.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  if (keep.size() > k) keep.resize(k);
  for (const auto& c : keep) out.pairs.push_back({reinsert_urls(c.src), reinsert_urls(c.trg), c.alignment});
  return out;
}

}  // namespace corpusforge::eval
