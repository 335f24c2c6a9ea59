#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/modifiers/ops.hpp"
#include "corpusforge/rng.hpp"

namespace corpusforge::modifiers {

using nlohmann::json;

enum class ModifierKind { UpperCase, TitleCase, Typos, Merge, Noise, InlineNoise, Tags };

inline std::string_view to_string(ModifierKind k) {
  switch (k) {
    case ModifierKind::UpperCase: return "upper_case";
    case ModifierKind::TitleCase: return "title_case";
    case ModifierKind::Typos: return "typos";
    case ModifierKind::Merge: return "merge";
    case ModifierKind::Noise: return "noise";
    case ModifierKind::InlineNoise: return "inline_noise";
    case ModifierKind::Tags: return "tags";
  }
  return "?";
}

struct ModifierSpec {
  ModifierKind kind = ModifierKind::UpperCase;
  double probability = 0.0;
  TypoParams typos;
  std::size_t merge_min = 2;
  std::size_t merge_max = 4;
  NoiseParams noise;
  InlineNoiseParams inline_noise;
  double tag_probability = 0.05;  // per bijectively aligned token, once the gate fired
  json raw;                       // as configured

  std::string name() const { return std::string(to_string(kind)); }
  bool needs_alignment() const { return kind == ModifierKind::InlineNoise || kind == ModifierKind::Tags; }
};

namespace detail {

inline double probability_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_number()) throw ConfigError(ctx + ": '" + key + "' must be a number");
  const double p = j.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(ctx + ": '" + key + "' must be within [0, 1]");
  return p;
}

inline std::size_t count_field(const json& j, const char* key, const std::string& ctx, std::size_t min) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min))
    throw ConfigError(ctx + ": '" + key + "' must be an integer >= " + std::to_string(min));
  return j.get<std::size_t>();
}

}  // namespace detail

/// Parses `{name, probability, ...params}`; unknown keys are rejected.
inline ModifierSpec parse_modifier(const json& j) {
  if (!j.is_object()) throw ConfigError("modifier entry must be a mapping");
  if (!j.contains("name") || !j["name"].is_string()) throw ConfigError("modifier entry needs a 'name'");
  const auto name = j["name"].get<std::string>();
  const std::string ctx = "modifier '" + name + "'";
  ModifierSpec spec;
  spec.raw = j;
  std::set<std::string> allowed{"name", "probability"};
  if (name == "upper_case") {
    spec.kind = ModifierKind::UpperCase;
  } else if (name == "title_case") {
    spec.kind = ModifierKind::TitleCase;
  } else if (name == "typos") {
    spec.kind = ModifierKind::Typos;
    allowed.insert({"classes", "word_prob", "max_per_word", "keyboard"});
  } else if (name == "merge") {
    spec.kind = ModifierKind::Merge;
    allowed.insert("n_range");
  } else if (name == "noise") {
    spec.kind = ModifierKind::Noise;
    allowed.insert({"min_len", "max_len", "max_token_len", "charset"});
  } else if (name == "inline_noise") {
    spec.kind = ModifierKind::InlineNoise;
    allowed.insert({"max_tokens", "charset"});
  } else if (name == "tags") {
    spec.kind = ModifierKind::Tags;
    allowed.insert("token_probability");
  } else {
    throw ConfigError("unknown modifier '" + name + "'");
  }
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(ctx + ": unknown parameter '" + key + "'");
  if (!j.contains("probability")) throw ConfigError(ctx + ": 'probability' is required");
  spec.probability = detail::probability_field(j["probability"], "probability", ctx);

  switch (spec.kind) {
    case ModifierKind::Typos:
      if (j.contains("classes")) {
        if (!j["classes"].is_array() || j["classes"].empty()) throw ConfigError(ctx + ": 'classes' must be a non-empty list");
        spec.typos.classes.clear();
        for (const auto& c : j["classes"]) {
          if (!c.is_string()) throw ConfigError(ctx + ": typo classes are strings");
          spec.typos.classes.push_back(parse_typo_class(c.get<std::string>()));
        }
      }
      if (j.contains("word_prob")) spec.typos.word_prob = detail::probability_field(j["word_prob"], "word_prob", ctx);
      if (j.contains("max_per_word"))
        spec.typos.max_per_word = static_cast<int>(detail::count_field(j["max_per_word"], "max_per_word", ctx, 1));
      if (j.contains("keyboard")) {
        if (!j["keyboard"].is_object()) throw ConfigError(ctx + ": 'keyboard' maps a key to its neighbor keys");
        std::map<char32_t, std::u32string> adj;
        for (const auto& [k, v] : j["keyboard"].items()) {
          const auto key = utf8::decode(k);
          if (key.size() != 1 || !v.is_string()) throw ConfigError(ctx + ": keyboard entries are single characters mapped to strings");
          adj[unicode::to_lower_char(key[0])] = utf8::decode(v.get<std::string>());
        }
        spec.typos.keyboard = Keyboard(std::move(adj));
      }
      break;
    case ModifierKind::Merge:
      if (j.contains("n_range")) {
        const auto& r = j["n_range"];
        if (!r.is_array() || r.size() != 2) throw ConfigError(ctx + ": 'n_range' must be [min, max]");
        spec.merge_min = detail::count_field(r[0], "n_range", ctx, 2);
        spec.merge_max = detail::count_field(r[1], "n_range", ctx, 2);
        if (spec.merge_min > spec.merge_max) throw ConfigError(ctx + ": n_range min exceeds max");
      }
      break;
    case ModifierKind::Noise:
      if (j.contains("min_len")) spec.noise.min_len = detail::count_field(j["min_len"], "min_len", ctx, 1);
      if (j.contains("max_len")) spec.noise.max_len = detail::count_field(j["max_len"], "max_len", ctx, 1);
      if (j.contains("max_token_len")) spec.noise.max_token_len = detail::count_field(j["max_token_len"], "max_token_len", ctx, 1);
      if (j.contains("charset")) spec.noise.charset = Charset::from_json(j["charset"]);
      if (spec.noise.min_len > spec.noise.max_len) throw ConfigError(ctx + ": min_len exceeds max_len");
      break;
    case ModifierKind::InlineNoise:
      if (j.contains("max_tokens")) spec.inline_noise.max_tokens = detail::count_field(j["max_tokens"], "max_tokens", ctx, 1);
      if (j.contains("charset")) spec.inline_noise.charset = Charset::from_json(j["charset"]);
      break;
    case ModifierKind::Tags:
      if (j.contains("token_probability"))
        spec.tag_probability = detail::probability_field(j["token_probability"], "token_probability", ctx);
      break;
    default:
      break;
  }
  return spec;
}

struct ModifierStats {
  std::string name;
  std::uint64_t considered = 0;  // pairs whose gate was drawn
  std::uint64_t applied = 0;     // gate fired and the modifier ran
  std::uint64_t skipped = 0;     // gate fired but the pair did not qualify
};

inline json to_json(const ModifierStats& s) {
  return json{{"name", s.name}, {"considered", s.considered}, {"applied", s.applied}, {"skipped", s.skipped}};
}

/// Applies a list of modifiers to a chunk of pairs. The k-th modifier of a given
/// kind draws from `rng.derive(kind).derive(k).derive(position)`, so adding a
/// modifier of another kind leaves the draws of the others untouched.
class ModifierChain {
 public:
  ModifierChain() = default;
  ModifierChain(std::vector<ModifierSpec> specs, int num_fields) : specs_(std::move(specs)) {
    int upper = -1, title = -1;
    for (std::size_t m = 0; m < specs_.size(); ++m) {
      const auto& s = specs_[m];
      if (s.needs_alignment() && num_fields != 3)
        throw ConfigError("modifier '" + s.name() + "' needs word alignments (num_fields: 3)");
      if (s.kind == ModifierKind::UpperCase) {
        if (upper >= 0) throw ConfigError("upper_case listed twice");
        upper = static_cast<int>(m);
      }
      if (s.kind == ModifierKind::TitleCase) {
        if (title >= 0) throw ConfigError("title_case listed twice");
        title = static_cast<int>(m);
      }
      stats_.push_back({s.name(), 0, 0, 0});
    }
    if (upper >= 0 && title >= 0 && specs_[upper].probability + specs_[title].probability > 1.0 + 1e-12)
      throw ConfigError("upper_case and title_case probabilities must sum to at most 1");
    upper_ = upper;
    title_ = title;
    casing_at_ = upper < 0 ? title : (title < 0 ? upper : std::min(upper, title));
    with_alignment_ = num_fields == 3;
  }

  const std::vector<ModifierSpec>& specs() const noexcept { return specs_; }
  const std::vector<ModifierStats>& stats() const noexcept { return stats_; }
  void reset_stats() {
    for (auto& s : stats_) s.considered = s.applied = s.skipped = 0;
  }

  std::vector<SentencePair> apply(std::vector<SentencePair> items, const Rng& rng) {
    std::map<ModifierKind, std::uint64_t> seen;
    for (std::size_t m = 0; m < specs_.size(); ++m) {
      const auto& spec = specs_[m];
      const bool casing = spec.kind == ModifierKind::UpperCase || spec.kind == ModifierKind::TitleCase;
      const Rng base = casing ? rng.derive("casing") : rng.derive(spec.name()).derive(seen[spec.kind]++);
      switch (spec.kind) {
        case ModifierKind::UpperCase:
        case ModifierKind::TitleCase:
          if (static_cast<int>(m) == casing_at_) apply_casing(items, base);
          break;
        case ModifierKind::Merge:
          items = apply_merge(std::move(items), spec, stats_[m], base);
          break;
        case ModifierKind::Noise: {
          std::vector<SentencePair> out;
          out.reserve(items.size() + items.size() / 8);
          for (std::size_t pos = 0; pos < items.size(); ++pos) {
            Rng r = base.derive(pos);
            out.push_back(std::move(items[pos]));
            ++stats_[m].considered;
            if (gate(spec.probability, r)) {
              out.push_back(noise_sentence(spec.noise, r, with_alignment_));
              ++stats_[m].applied;
            }
          }
          items = std::move(out);
          break;
        }
        default:
          for (std::size_t pos = 0; pos < items.size(); ++pos) {
            Rng r = base.derive(pos);
            ++stats_[m].considered;
            if (!gate(spec.probability, r)) continue;
            apply_one(items[pos], spec, stats_[m], r);
          }
      }
    }
    return items;
  }

 private:
  // One uniform draw picks upper, title or neither.
  void apply_casing(std::vector<SentencePair>& items, const Rng& base) {
    const double pu = upper_ >= 0 ? specs_[upper_].probability : 0.0;
    const double pt = title_ >= 0 ? specs_[title_].probability : 0.0;
    for (std::size_t pos = 0; pos < items.size(); ++pos) {
      Rng r = base.derive(pos);
      const double u = r.uniform();
      if (upper_ >= 0) ++stats_[upper_].considered;
      if (title_ >= 0) ++stats_[title_].considered;
      if (u < pu) {
        items[pos] = upper_case(std::move(items[pos]));
        ++stats_[upper_].applied;
      } else if (u < pu + pt) {
        items[pos] = title_case(std::move(items[pos]));
        ++stats_[title_].applied;
      }
    }
  }

  static std::vector<SentencePair> apply_merge(std::vector<SentencePair> items, const ModifierSpec& spec, ModifierStats& st,
                                               const Rng& base) {
    std::vector<SentencePair> out;
    out.reserve(items.size());
    std::size_t i = 0;
    while (i < items.size()) {
      Rng r = base.derive(i);
      ++st.considered;
      if (gate(spec.probability, r)) {
        const std::size_t want = r.between(spec.merge_min, spec.merge_max);
        const std::size_t n = std::min(want, items.size() - i);
        if (n >= 2) {
          out.push_back(merge(std::span<const SentencePair>(items.data() + i, n)));
          ++st.applied;
          i += n;
          continue;
        }
        ++st.skipped;
      }
      out.push_back(std::move(items[i]));
      ++i;
    }
    return out;
  }

  static void apply_one(SentencePair& pair, const ModifierSpec& spec, ModifierStats& st, Rng& r) {
    switch (spec.kind) {
      case ModifierKind::Typos:
        pair = typos(std::move(pair), spec.typos, r);
        ++st.applied;
        break;
      case ModifierKind::InlineNoise:
        if (auto res = inline_noise(pair, spec.inline_noise, r)) {
          pair = std::move(*res);
          ++st.applied;
        } else {
          ++st.skipped;
        }
        break;
      case ModifierKind::Tags:
        if (tag_candidates(pair).empty()) {
          ++st.skipped;
        } else {
          pair = tags(pair, spec.tag_probability, r);
          ++st.applied;
        }
        break;
      default:
        break;
    }
  }

  std::vector<ModifierSpec> specs_;
  std::vector<ModifierStats> stats_;
  int upper_ = -1;
  int title_ = -1;
  int casing_at_ = -1;  // the single casing draw happens at the first casing spec
  bool with_alignment_ = false;
};

/// Convenience wrapper for one-off use.
inline std::vector<SentencePair> apply_modifiers(std::vector<SentencePair> items, const std::vector<ModifierSpec>& specs,
                                                 int num_fields, const Rng& rng, std::vector<ModifierStats>* stats = nullptr) {
  ModifierChain chain(specs, num_fields);
  auto out = chain.apply(std::move(items), rng);
  if (stats) *stats = chain.stats();
  return out;
}

}  // namespace corpusforge::modifiers
