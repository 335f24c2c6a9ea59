#pragma once

// Shared fixtures and hand-rolled generators for the test binaries.

#include <fstream>
#include <string>
#include <vector>

#include "corpusforge/corpusforge.hpp"

namespace cftest {

namespace cf = corpusforge;

inline void write_text(const cf::fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline void write_lines(const cf::fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(cf::Rng::from_seed(seed)) {}

  cf::Rng& rng() { return rng_; }
  std::uint64_t below(std::uint64_t n) { return rng_.below(n); }
  std::int64_t between(std::int64_t lo, std::int64_t hi) { return rng_.between(lo, hi); }
  bool coin(double p = 0.5) { return rng_.bernoulli(p); }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::string ascii_word(std::size_t min_len = 1, std::size_t max_len = 8) {
    static const std::string letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::string w;
    const auto n = between(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len));
    for (std::int64_t i = 0; i < n; ++i) w.push_back(letters[below(letters.size())]);
    return w;
  }

  // Mixed scripts, punctuation and digits.
  std::string word() {
    static const std::vector<std::string> extra = {"é", "ß", "ö", "ł", "ж", "Я", "ω", "中", "文", "の", "ş", "ı", "İ",
                                                   ",", ".", "!", "?", "'", "-", "1", "7", "€", "(", ")"};
    std::string w;
    const auto n = between(1, 9);
    for (std::int64_t i = 0; i < n; ++i) w += coin(0.75) ? ascii_word(1, 1) : pick(extra);
    return w;
  }

  std::string sentence(std::size_t min_tokens = 1, std::size_t max_tokens = 12) {
    std::string s;
    const auto n = between(static_cast<std::int64_t>(min_tokens), static_cast<std::int64_t>(max_tokens));
    for (std::int64_t i = 0; i < n; ++i) {
      if (i) s.push_back(' ');
      s += word();
    }
    return s;
  }

  cf::Alignment alignment(std::size_t ns, std::size_t nt) {
    cf::Alignment a;
    if (ns == 0 || nt == 0) return a;
    const auto links = below(ns + nt + 1);
    for (std::uint64_t k = 0; k < links; ++k)
      a.push_back({static_cast<std::uint32_t>(below(ns)), static_cast<std::uint32_t>(below(nt))});
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
  }

  // Mostly diagonal alignments so bijective links are common.
  cf::Alignment diagonal_alignment(std::size_t ns, std::size_t nt) {
    cf::Alignment a;
    for (std::size_t i = 0; i < std::min(ns, nt); ++i)
      if (coin(0.85)) a.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i)});
    if (ns && nt && coin(0.3)) a.push_back({static_cast<std::uint32_t>(below(ns)), static_cast<std::uint32_t>(below(nt))});
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
  }

  cf::SentencePair pair(bool with_alignment) {
    cf::SentencePair p{sentence(), sentence(), std::nullopt};
    if (with_alignment) {
      const auto ns = cf::token_count(p.src), nt = cf::token_count(p.trg);
      p.alignment = coin(0.5) ? diagonal_alignment(ns, nt) : alignment(ns, nt);
    }
    return p;
  }

 private:
  cf::Rng rng_;
};

// Synthetic dataset where every line names its dataset and index.
inline cf::fs::path make_dataset(const cf::fs::path& dir, const std::string& name, std::size_t lines, bool aligned = false) {
  const auto p = dir / (name + ".tsv");
  std::ofstream out(p, std::ios::binary);
  for (std::size_t i = 0; i < lines; ++i) {
    out << name << " src " << i << " word\t" << name << " trg " << i << " word";
    if (aligned) out << "\t0-0 1-1 2-2 3-3";
    out << '\n';
  }
  return p;
}

inline std::string dataset_of(const std::string& line) { return line.substr(0, line.find(' ')); }

inline std::string slurp(const cf::fs::path& p) { return cf::read_file(p); }


// External filter descriptors used across the filter, service and acceptance tests.
inline void write_external_filters(const cf::fs::path& dir) {
  cf::fs::create_directories(dir);
  write_text(dir / "drop_digits.json", R"({"name": "drop_digits", "command": "grep -v '[0-9]'; test $? -le 1",
    "description": "drop records containing a digit"})");
  write_text(dir / "lower_src.json", R"({"name": "lower_src", "command": "tr A-Z a-z", "scope": "monolingual-src"})");
  write_text(dir / "tag_trg.json", R"({"name": "tag_trg", "command": "sed \"s/\\$/ $tag/\"", "scope": "monolingual-trg",
    "parameters": [{"name": "tag", "type": "string", "default": "[t]"}]})");
  write_text(dir / "head_n.json", R"({"name": "head_n", "command": "head -n \"$n\"",
    "parameters": [{"name": "n", "type": "number", "required": true}]})");
  write_text(dir / "broken.json", R"({"name": "broken", "command": "cat >/dev/null; echo 'model file missing' >&2; exit 2"})");
  write_text(dir / "slow.json", R"({"name": "slow", "command": "sleep 20; cat"})");
  write_text(dir / "bad_output.json", R"({"name": "bad_output", "command": "cat >/dev/null; echo no-tab-here"})");
}


// Optimal string alignment distance (adjacent transpositions count once).
inline std::size_t osa_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  return d[a.size()][b.size()];
}

inline std::size_t osa_distance(std::string_view a, std::string_view b) {
  return osa_distance(cf::utf8::decode(a), cf::utf8::decode(b));
}

// Every "__target__" is followed by one hint token and then a token starting with
// "__done__"; returns false otherwise. Collects (hint, source token index of the
// tag) for each occurrence.
inline bool tags_well_formed(const std::string& src, std::vector<std::pair<std::string, std::size_t>>* hints = nullptr) {
  const auto toks = cf::tokenize(src);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] == "__target__") {
      if (i == 0 || i + 2 >= toks.size()) return false;
      if (toks[i + 1].starts_with("__done__") || toks[i + 1] == "__target__") return false;
      if (!toks[i + 2].starts_with("__done__")) return false;
      if (hints) hints->emplace_back(std::string(toks[i + 1]), i);
      i += 2;
    } else if (toks[i].starts_with("__done__")) {
      return false;
    }
  }
  return true;
}

// Removes every "X __target__ H __done__P" hint, giving back "XP".
inline std::string strip_tags(const std::string& src) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto t = src.find(" __target__ ", pos);
    if (t == std::string::npos) break;
    const auto d = src.find(" __done__", t);
    out.append(src, pos, t - pos);
    pos = d + 9;
  }
  out.append(src, pos, std::string::npos);
  return out;
}

}  // namespace cftest
