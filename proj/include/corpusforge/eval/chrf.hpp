#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/unicode.hpp"
#include "corpusforge/utf8.hpp"

// Character n-gram F-score.
//
// Conventions:
//  * all whitespace is removed before n-grams are extracted;
//  * orders 1..max_n, beta weighs recall beta^2 times as much as precision;
//  * per order F = (1+b^2)PR / (b^2 P + R), 0 when P + R = 0;
//  * the score is the mean F over the orders where the hypothesis or the
//    reference has at least one n-gram (an order where only one side has n-grams
//    scores 0 and still counts; an order where neither does is left out);
//  * corpus scores pool the n-gram counts of all lines before computing P and R;
//  * two empty strings score 0.
namespace corpusforge::eval {

struct NgramCounts {
  std::uint64_t hyp = 0;
  std::uint64_t ref = 0;
  std::uint64_t match = 0;
};

struct ChrfStats {
  std::vector<NgramCounts> orders;  // index n-1

  explicit ChrfStats(int max_n = 6) : orders(static_cast<std::size_t>(max_n)) {}

  ChrfStats& operator+=(const ChrfStats& o) {
    for (std::size_t i = 0; i < orders.size() && i < o.orders.size(); ++i) {
      orders[i].hyp += o.orders[i].hyp;
      orders[i].ref += o.orders[i].ref;
      orders[i].match += o.orders[i].match;
    }
    return *this;
  }
};

inline std::u32string strip_whitespace(std::string_view s) {
  std::u32string out;
  utf8::for_each(s, [&](char32_t c) {
    if (!unicode::is_whitespace(c)) out.push_back(c);
  });
  return out;
}

inline std::map<std::u32string_view, std::uint64_t> ngram_counts(std::u32string_view s, std::size_t n) {
  std::map<std::u32string_view, std::uint64_t> m;
  if (s.size() < n) return m;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++m[s.substr(i, n)];
  return m;
}

inline ChrfStats chrf_stats(std::string_view hyp, std::string_view ref, int max_n = 6) {
  ChrfStats st(max_n);
  const auto h = strip_whitespace(hyp);
  const auto r = strip_whitespace(ref);
  for (int n = 1; n <= max_n; ++n) {
    auto& c = st.orders[static_cast<std::size_t>(n - 1)];
    const auto hc = ngram_counts(h, static_cast<std::size_t>(n));
    const auto rc = ngram_counts(r, static_cast<std::size_t>(n));
    for (const auto& [g, k] : hc) {
      c.hyp += k;
      if (auto it = rc.find(g); it != rc.end()) c.match += std::min(k, it->second);
    }
    for (const auto& [g, k] : rc) c.ref += k;
  }
  return st;
}

inline double chrf_from_stats(const ChrfStats& st, double beta = 2.0) {
  const double b2 = beta * beta;
  double sum = 0;
  int used = 0;
  for (const auto& c : st.orders) {
    if (c.hyp == 0 && c.ref == 0) continue;
    ++used;
    if (c.hyp == 0 || c.ref == 0 || c.match == 0) continue;
    const double p = static_cast<double>(c.match) / static_cast<double>(c.hyp);
    const double r = static_cast<double>(c.match) / static_cast<double>(c.ref);
    sum += (1 + b2) * p * r / (b2 * p + r);
  }
  return used ? 100.0 * sum / used : 0.0;
}

inline double chrf(std::string_view hyp, std::string_view ref, int max_n = 6, double beta = 2.0) {
  return chrf_from_stats(chrf_stats(hyp, ref, max_n), beta);
}

inline double corpus_chrf(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, int max_n = 6,
                          double beta = 2.0) {
  if (hyps.size() != refs.size())
    throw Error("hypothesis and reference counts differ (" + std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()) + ")");
  ChrfStats total(max_n);
  for (std::size_t i = 0; i < hyps.size(); ++i) total += chrf_stats(hyps[i], refs[i], max_n);
  return chrf_from_stats(total, beta);
}

/// Keeps only the characters outside `alphabet`, in their original order.
inline std::string remove_alphabet(std::string_view s, const std::set<char32_t>& alphabet) {
  std::string out;
  utf8::for_each(s, [&](char32_t c) {
    if (!alphabet.count(c)) utf8::append(out, c);
  });
  return out;
}

/// Corpus chrF over the out-of-alphabet characters only. Lines whose reference has
/// no such characters (ignoring whitespace) are skipped; 0 if every line is.
inline double chrf_oov_only(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                            const std::set<char32_t>& alphabet, int max_n = 6, double beta = 2.0) {
  if (hyps.size() != refs.size())
    throw Error("hypothesis and reference counts differ (" + std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()) + ")");
  ChrfStats total(max_n);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto r = remove_alphabet(refs[i], alphabet);
    if (strip_whitespace(r).empty()) continue;
    total += chrf_stats(remove_alphabet(hyps[i], alphabet), r, max_n);
  }
  return chrf_from_stats(total, beta);
}

/// Every non-whitespace character of `text`.
inline std::set<char32_t> alphabet_from_text(std::string_view text) {
  std::set<char32_t> a;
  utf8::for_each(text, [&](char32_t c) {
    if (!unicode::is_whitespace(c)) a.insert(c);
  });
  return a;
}

}  // namespace corpusforge::eval
