#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace corpusforge;
using namespace corpusforge::eval;

namespace {

// Brute-force chrF over code point vectors: n-grams compared element by element,
// matches found by crossing off reference n-grams one at a time.
struct OracleCounts {
  double hyp = 0, ref = 0, match = 0;
};

std::vector<std::u32string> grams(const std::u32string& s, std::size_t n) {
  std::vector<std::u32string> g;
  for (std::size_t i = 0; i + n <= s.size(); ++i) g.push_back(s.substr(i, n));
  return g;
}

std::u32string no_spaces(const std::u32string& s) {
  std::u32string out;
  for (char32_t c : s)
    if (c != U' ') out.push_back(c);
  return out;
}

OracleCounts oracle_counts(const std::u32string& hyp, const std::u32string& ref, std::size_t n) {
  const auto h = grams(no_spaces(hyp), n);
  auto r = grams(no_spaces(ref), n);
  OracleCounts c;
  c.hyp = static_cast<double>(h.size());
  c.ref = static_cast<double>(r.size());
  std::vector<bool> used(r.size(), false);
  for (const auto& g : h)
    for (std::size_t j = 0; j < r.size(); ++j)
      if (!used[j] && r[j] == g) {
        used[j] = true;
        c.match += 1;
        break;
      }
  return c;
}

double oracle_score(const std::vector<OracleCounts>& per_order) {
  double sum = 0;
  int used = 0;
  for (const auto& c : per_order) {
    if (c.hyp == 0 && c.ref == 0) continue;
    ++used;
    if (c.match == 0) continue;
    const double p = c.match / c.hyp, r = c.match / c.ref;
    sum += 5 * p * r / (4 * p + r);
  }
  return used ? 100 * sum / used : 0;
}

double oracle_chrf(const std::u32string& hyp, const std::u32string& ref) {
  std::vector<OracleCounts> orders;
  for (std::size_t n = 1; n <= 6; ++n) orders.push_back(oracle_counts(hyp, ref, n));
  return oracle_score(orders);
}

std::u32string random_text(cftest::Gen& g, std::size_t max_len) {
  static const std::u32string alphabet = U"abcab  é日x";
  std::u32string s;
  const std::size_t n = g.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[g.below(alphabet.size())]);
  return s;
}

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  for (auto t : tokenize(s)) out.emplace_back(t);
  return out;
}

}  // namespace

TEST(Chrf, KnownValues) {
  EXPECT_DOUBLE_EQ(chrf("abc", "abc"), 100.0);
  EXPECT_DOUBLE_EQ(chrf("a b c", "abc"), 100.0);
  EXPECT_DOUBLE_EQ(chrf("a", "b"), 0.0);
  EXPECT_DOUBLE_EQ(chrf("", ""), 0.0);
  EXPECT_DOUBLE_EQ(chrf("abc", ""), 0.0);
  // "ab" vs "abc": unigram P=1 R=2/3, bigram P=1 R=1/2, trigram only on one side
  const double f1 = 5 * (2.0 / 3) / (4 + 2.0 / 3), f2 = 5 * 0.5 / (4 + 0.5);
  EXPECT_NEAR(chrf("ab", "abc"), 100 * (f1 + f2 + 0) / 3, 1e-12);
}

TEST(Chrf, MatchesBruteForceOracleProperty) {
  cftest::Gen g(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto h = random_text(g, 14), r = random_text(g, 14);
    const double got = chrf(utf8::encode(h), utf8::encode(r));
    EXPECT_NEAR(got, oracle_chrf(h, r), 1e-9) << utf8::encode(h) << " | " << utf8::encode(r);
  }
}

TEST(Chrf, IdentityScoresHundredProperty) {
  cftest::Gen g(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = g.sentence();
    if (strip_whitespace(s).empty()) continue;
    EXPECT_DOUBLE_EQ(chrf(s, s), 100.0) << s;
  }
}

TEST(Chrf, CorpusScorePoolsCounts) {
  cftest::Gen g(17);
  std::vector<std::string> hyps, refs;
  std::vector<OracleCounts> pooled(6);
  for (int i = 0; i < 20; ++i) {
    const auto h = random_text(g, 10), r = random_text(g, 10);
    hyps.push_back(utf8::encode(h));
    refs.push_back(utf8::encode(r));
    for (std::size_t n = 1; n <= 6; ++n) {
      const auto c = oracle_counts(h, r, n);
      pooled[n - 1].hyp += c.hyp;
      pooled[n - 1].ref += c.ref;
      pooled[n - 1].match += c.match;
    }
  }
  EXPECT_NEAR(corpus_chrf(hyps, refs), oracle_score(pooled), 1e-9);
  EXPECT_DOUBLE_EQ(corpus_chrf({"abc"}, {"abd"}), chrf("abc", "abd"));
  EXPECT_THROW(corpus_chrf({"a"}, {}), Error);
}

TEST(Chrf, OovOnlyScoresCharactersOutsideAlphabet) {
  const auto alphabet = alphabet_from_text("abcdefghijklmnopqrstuvwxyz");
  EXPECT_EQ(remove_alphabet("ab日c本", alphabet), "日本");
  // the in-alphabet mistakes do not matter
  EXPECT_DOUBLE_EQ(chrf_oov_only({"xyz 日本"}, {"abc 日本"}, alphabet), 100.0);
  EXPECT_DOUBLE_EQ(chrf_oov_only({"abc"}, {"abc 日本"}, alphabet), 0.0);
  // lines without OOV reference characters are skipped
  EXPECT_DOUBLE_EQ(chrf_oov_only({"xyz", "日"}, {"abc", "日"}, alphabet), 100.0);
  EXPECT_DOUBLE_EQ(chrf_oov_only({"xyz"}, {"abc"}, alphabet), 0.0);
}

TEST(Chrf, OovOnlyWithEmptyAlphabetEqualsChrfProperty) {
  cftest::Gen g(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> hyps, refs;
    for (int i = 0; i < 5; ++i) {
      hyps.push_back(g.sentence(0, 6));
      refs.push_back(g.sentence(1, 6));
    }
    EXPECT_NEAR(chrf_oov_only(hyps, refs, {}), corpus_chrf(hyps, refs), 1e-12);
  }
}

TEST(Urls, GrammarCases) {
  EXPECT_EQ(extract_urls("see https://a.org/x?y=1, or HTTP://B.com."),
            (std::vector<std::string>{"https://a.org/x?y=1", "HTTP://B.com"}));
  EXPECT_EQ(extract_urls("(http://a.org/p)"), (std::vector<std::string>{"http://a.org/p"}));
  EXPECT_EQ(extract_urls("\"http://a.org/\"!?"), (std::vector<std::string>{"http://a.org/"}));
  EXPECT_TRUE(extract_urls("xhttp://a.org 1https://b").empty());
  EXPECT_TRUE(extract_urls("http:// alone, https://.").empty());
  EXPECT_TRUE(extract_urls("ftp://a.org www.a.org").empty());
  EXPECT_EQ(extract_urls("-http://a\thttps://béc"), (std::vector<std::string>{"http://a", "https://béc"}));
  EXPECT_EQ(extract_urls("http://a.org/http://b"), (std::vector<std::string>{"http://a.org/http://b"}));
}

TEST(Urls, StripAndReinsertRoundTripProperty) {
  cftest::Gen g(8);
  const std::vector<std::string> urls{"http://a.org", "https://x.y/z?q=1", "HTTPS://Q.R/"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const auto n = g.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      s += g.coin(0.3) ? g.pick(urls) : g.word();
      if (g.coin(0.2)) s += ".";
      s += " ";
    }
    const auto st = strip_urls(s);
    EXPECT_EQ(reinsert_urls(st), s);
    EXPECT_TRUE(extract_urls(st.text).empty() || st.text.find("://") != std::string::npos);
  }
}

TEST(Urls, ExactMatchForcedCases) {
  std::vector<std::string> refs, good, ninety, none;
  for (int i = 0; i < 10; ++i) {
    const auto u = "https://example.org/page" + std::to_string(i);
    refs.push_back("see " + u + " now");
    good.push_back("voir " + u + ".");
    ninety.push_back(i == 3 ? "voir https://example.org/PAGE3" : "voir " + u);
    none.push_back("voir example.org");
  }
  EXPECT_DOUBLE_EQ(url_exact_match(good, refs), 100.0);
  EXPECT_DOUBLE_EQ(url_exact_match(ninety, refs), 90.0);
  EXPECT_DOUBLE_EQ(url_exact_match(none, refs), 0.0);
  // multiplicity counts, and a URL must appear on the same line
  EXPECT_DOUBLE_EQ(url_exact_match({"http://a http://b"}, {"http://a http://a"}), 50.0);
  EXPECT_DOUBLE_EQ(url_exact_match({"", "http://a"}, {"http://a", ""}), 0.0);
  EXPECT_DOUBLE_EQ(url_exact_match({"x"}, {"y"}), 0.0);
  EXPECT_THROW(url_exact_match({"a"}, {}), Error);
}

TEST(Urls, TestSetKeepsMatchingPairsRankedByScore) {
  const std::vector<ScoredPair> in{
      {{"a http://x.org b", "c http://x.org d"}, 0.5},
      {{"no url", "none"}, 0.9},
      {{"http://y.org", "http://z.org"}, 0.9},
      {{"one http://q.org/", "deux http://q.org/."}, 0.7},
      {{"tie http://x.org", "tie http://x.org"}, 0.5},
      {{"nan http://x.org", "nan http://x.org"}, std::nan("")},
      {{"two http://a http://b", "deux http://b http://a"}, 0.1},
  };
  const auto out = build_url_testset(in, 3);
  ASSERT_EQ(out.pairs.size(), 3u);
  EXPECT_EQ(out.pairs[0].src, "one http://q.org/");
  EXPECT_EQ(out.pairs[0].trg, "deux http://q.org/.");
  EXPECT_EQ(out.pairs[1].src, "a http://x.org b");
  EXPECT_EQ(out.pairs[2].src, "tie http://x.org");
  ASSERT_EQ(out.rejected.size(), 3u);
  EXPECT_EQ(out.rejected[0].index, 1u);
  EXPECT_EQ(out.rejected[1].index, 2u);
  EXPECT_EQ(out.rejected[2].index, 5u);
  EXPECT_EQ(build_url_testset(in).pairs.size(), 4u);
}

TEST(Variants, Typo4EditsExactlyMinFourEligibleWordsProperty) {
  cftest::Gen g(31);
  for (int trial = 0; trial < 400; ++trial) {
    // ASCII letter words: eligible exactly when at least two characters long
    std::vector<std::string> words;
    const auto n = g.below(9);
    std::size_t eligible = 0;
    for (std::size_t i = 0; i < n; ++i) {
      words.push_back(g.ascii_word(1, 7));
      if (words.back().size() >= 2) ++eligible;
    }
    const SentencePair base{join(words), "target side"};
    const auto out = make_variant({base}, VariantKind::Typo4, static_cast<std::uint64_t>(trial));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].trg, base.trg);
    const auto after = words_of(out[0].src);
    ASSERT_EQ(after.size(), words.size()) << out[0].src;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (after[i] == words[i]) continue;
      ++changed;
      EXPECT_EQ(cftest::osa_distance(words[i], after[i]), 1u) << words[i] << " -> " << after[i];
    }
    EXPECT_EQ(changed, std::min<std::size_t>(4, eligible)) << base.src << " -> " << out[0].src;
  }
}

TEST(Variants, Typo4OnMixedScriptsStillCountsEdits) {
  cftest::Gen g(12);
  for (int trial = 0; trial < 200; ++trial) {
    const SentencePair base{g.sentence(), "t"};
    Rng r = Rng::from_seed(trial);
    const auto [src, n] = insert_typos(base.src, 4, r);
    const auto before = words_of(base.src), after = words_of(src);
    ASSERT_EQ(before.size(), after.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < before.size(); ++i)
      if (before[i] != after[i]) {
        ++changed;
        EXPECT_EQ(cftest::osa_distance(before[i], after[i]), 1u);
      }
    EXPECT_EQ(changed, n);
    EXPECT_LE(n, 4u);
  }
}

TEST(Variants, CasingVariantsAreUncaseEqualProperty) {
  cftest::Gen g(44);
  // dotless i upper-cases to I, which folds to dotted i, so it cannot round-trip
  auto foldable = [](const std::string& s) { return s.find("\u0131") == std::string::npos; };
  std::vector<SentencePair> base;
  while (base.size() < 300) {
    SentencePair p{g.sentence(), g.sentence(), std::nullopt};
    if (foldable(p.src) && foldable(p.trg)) base.push_back(std::move(p));
  }
  for (auto kind : {VariantKind::AllCaps, VariantKind::TitleCase}) {
    const auto out = make_variant(base, kind, 1);
    ASSERT_EQ(out.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(unicode::case_fold(out[i].src), unicode::case_fold(base[i].src)) << base[i].src;
      EXPECT_EQ(unicode::case_fold(out[i].trg), unicode::case_fold(base[i].trg)) << base[i].trg;
    }
  }
  EXPECT_EQ(make_variant({{"hello world", "hallo welt"}}, VariantKind::AllCaps, 0)[0].src, "HELLO WORLD");
  EXPECT_EQ(make_variant({{"hello world", "hallo welt"}}, VariantKind::TitleCase, 0)[0].trg, "Hallo Welt");
  EXPECT_NE(unicode::case_fold(make_variant({{"\u0131", "x"}}, VariantKind::AllCaps, 0)[0].src), unicode::case_fold("\u0131"));
}

TEST(Variants, NoiseVariantsNeedAlignmentsAndCopyNoise) {
  EXPECT_THROW(make_variant({{"a b", "c d"}}, VariantKind::Emoji, 0), FormatError);
  cftest::Gen g(2);
  std::vector<SentencePair> base;
  for (int i = 0; i < 200; ++i) base.push_back(g.pair(true));
  for (auto kind : {VariantKind::Emoji, VariantKind::UnicodeNoise}) {
    const auto out = make_variant(base, kind, 9);
    ASSERT_EQ(out.size(), base.size());
    std::size_t noisy = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_TRUE(alignment_in_bounds(out[i]));
      const auto s = words_of(out[i].src), t = words_of(out[i].trg);
      if (s.size() == words_of(base[i].src).size()) continue;
      ++noisy;
      // exactly one new token on each side, and it is the same string
      std::vector<std::string> extra_s, extra_t;
      auto bs = words_of(base[i].src), bt = words_of(base[i].trg);
      for (auto& w : s)
        if (auto it = std::find(bs.begin(), bs.end(), w); it != bs.end()) bs.erase(it); else extra_s.push_back(w);
      for (auto& w : t)
        if (auto it = std::find(bt.begin(), bt.end(), w); it != bt.end()) bt.erase(it); else extra_t.push_back(w);
      ASSERT_EQ(extra_s.size(), 1u);
      EXPECT_EQ(extra_s, extra_t);
    }
    EXPECT_GT(noisy, 100u);
    EXPECT_EQ(make_variant(base, kind, 9)[17], out[17]);
  }
  EXPECT_EQ(make_variant(base, VariantKind::Plain, 0), base);
  EXPECT_EQ(parse_variant_kind("typo4"), VariantKind::Typo4);
  EXPECT_THROW(parse_variant_kind("url"), ConfigError);
}
