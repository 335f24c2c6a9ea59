#pragma once

#include <yaml-cpp/yaml.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/modifiers/chain.hpp"

namespace corpusforge::scheduler {

using nlohmann::json;

struct StageConfig {
  std::string name;
  std::vector<std::pair<std::string, double>> weights;  // sorted by dataset name, normalised to sum 1
  std::string until_dataset;
  std::uint64_t until_epochs = 1;
  std::vector<modifiers::ModifierSpec> modifiers;

  double weight_of(std::string_view dataset) const {
    for (const auto& [d, w] : weights)
      if (d == dataset) return w;
    return 0.0;
  }
};

struct TrainerConfig {
  std::vector<std::pair<std::string, fs::path>> datasets;  // sorted by name
  std::vector<StageConfig> stages;
  std::uint64_t seed = 0;
  int num_fields = 2;
  std::size_t chunk_size = 1000;
  std::size_t shuffle_chunk_lines = 100000;
  std::uint64_t snapshot_every = 10000;
  std::optional<fs::path> tmp_dir;
  std::optional<std::string> trainer;
  std::optional<std::string> output;
  json document;  // the parsed document, for fingerprinting

  const fs::path& dataset_path(std::string_view name) const {
    for (const auto& [d, p] : datasets)
      if (d == name) return p;
    throw ConfigError("unknown dataset '" + std::string(name) + "'");
  }
  std::size_t dataset_index(std::string_view name) const {
    for (std::size_t i = 0; i < datasets.size(); ++i)
      if (datasets[i].first == name) return i;
    throw ConfigError("unknown dataset '" + std::string(name) + "'");
  }
};

/// YAML tree to JSON. Quoted scalars stay strings; plain scalars become null,
/// bool, integer or float when they parse as one.
inline json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& item : node) a.push_back(yaml_to_json(item));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (o.contains(key)) throw ConfigError("duplicate key '" + key + "'");
        o[key] = yaml_to_json(kv.second);
      }
      return o;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;
      if (s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
      if (s == "true" || s == "True" || s == "TRUE") return true;
      if (s == "false" || s == "False" || s == "FALSE") return false;
      std::int64_t i;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
      if (ec == std::errc() && p == s.data() + s.size()) return i;
      double d;
      auto [p2, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (ec2 == std::errc() && p2 == s.data() + s.size()) return d;
      return s;
    }
  }
  return nullptr;
}

namespace detail {

// A weight is a non-negative number or a "p/q" fraction string.
inline double parse_weight(const json& j, const std::string& ctx) {
  double w = -1;
  if (j.is_number()) {
    w = j.get<double>();
  } else if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto slash = s.find('/');
    double num = 0, den = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const char* mid = slash == std::string::npos ? e : s.data() + slash;
    auto r1 = std::from_chars(b, mid, num);
    if (r1.ec != std::errc() || r1.ptr != mid) throw ConfigError(ctx + ": weight '" + s + "' is not a number");
    if (slash != std::string::npos) {
      auto r2 = std::from_chars(mid + 1, e, den);
      if (r2.ec != std::errc() || r2.ptr != e || den <= 0) throw ConfigError(ctx + ": weight '" + s + "' is not a fraction");
      w = num / den;
    } else {
      w = num;
    }
  } else {
    throw ConfigError(ctx + ": weight must be a number");
  }
  if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(ctx + ": weight must be non-negative");
  return w;
}

inline std::uint64_t positive_int(const json& j, const std::string& what, std::uint64_t min = 1) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min))
    throw ConfigError("'" + what + "' must be an integer >= " + std::to_string(min));
  return j.get<std::uint64_t>();
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& ctx) {
  for (const auto& [k, _] : obj.items()) {
    bool ok = false;
    for (const char* allowed : keys) ok = ok || k == allowed;
    if (!ok) throw ConfigError(ctx + ": unknown key '" + k + "'");
  }
}

}  // namespace detail

/// Validates a configuration document. Relative dataset paths resolve against
/// `base_dir`.
inline TrainerConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("configuration must be a mapping");
  detail::reject_unknown(doc,
                         {"datasets", "stages", "seed", "num_fields", "chunk_size", "shuffle_chunk_lines", "snapshot_every",
                          "tmp_dir", "trainer", "output"},
                         "configuration");
  TrainerConfig cfg;
  cfg.document = doc;

  if (!doc.contains("datasets") || !doc["datasets"].is_object() || doc["datasets"].empty())
    throw ConfigError("'datasets' must map at least one dataset name to a file path");
  for (const auto& [name, path] : doc["datasets"].items()) {
    if (!path.is_string()) throw ConfigError("dataset '" + name + "': path must be a string");
    fs::path p = path.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    cfg.datasets.emplace_back(name, p.lexically_normal());
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) throw ConfigError("'seed' must be an integer");
    cfg.seed = static_cast<std::uint64_t>(doc["seed"].get<std::int64_t>());
  }
  if (doc.contains("num_fields")) {
    if (!doc["num_fields"].is_number_integer() || (doc["num_fields"] != 2 && doc["num_fields"] != 3))
      throw ConfigError("'num_fields' must be 2 or 3");
    cfg.num_fields = doc["num_fields"].get<int>();
  }
  if (doc.contains("chunk_size")) cfg.chunk_size = detail::positive_int(doc["chunk_size"], "chunk_size");
  if (doc.contains("shuffle_chunk_lines"))
    cfg.shuffle_chunk_lines = detail::positive_int(doc["shuffle_chunk_lines"], "shuffle_chunk_lines");
  if (doc.contains("snapshot_every")) cfg.snapshot_every = detail::positive_int(doc["snapshot_every"], "snapshot_every");
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    if (!doc[key].is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
    return doc[key].get<std::string>();
  };
  if (auto t = opt_string("tmp_dir")) cfg.tmp_dir = fs::path(*t).is_relative() ? base_dir / *t : fs::path(*t);
  cfg.trainer = opt_string("trainer");
  cfg.output = opt_string("output");

  if (!doc.contains("stages") || !doc["stages"].is_array() || doc["stages"].empty())
    throw ConfigError("'stages' must be a non-empty list");
  std::set<std::string> stage_names;
  for (const auto& sj : doc["stages"]) {
    if (!sj.is_object()) throw ConfigError("each stage must be a mapping");
    StageConfig st;
    if (!sj.contains("name") || !sj["name"].is_string()) throw ConfigError("every stage needs a 'name'");
    st.name = sj["name"].get<std::string>();
    const std::string ctx = "stage '" + st.name + "'";
    detail::reject_unknown(sj, {"name", "weights", "until", "modifiers"}, ctx);
    if (!stage_names.insert(st.name).second) throw ConfigError(ctx + " is declared twice");

    if (!sj.contains("weights") || !sj["weights"].is_object() || sj["weights"].empty())
      throw ConfigError(ctx + ": 'weights' must map dataset names to weights");
    double total = 0;
    for (const auto& [d, w] : sj["weights"].items()) {
      bool declared = false;
      for (const auto& [name, _] : cfg.datasets) declared = declared || name == d;
      if (!declared) throw ConfigError(ctx + " references undeclared dataset '" + d + "'");
      const double v = detail::parse_weight(w, ctx + ", dataset '" + d + "'");
      st.weights.emplace_back(d, v);
      total += v;
    }
    if (!(total > 0)) throw ConfigError(ctx + ": weights sum to zero");
    // name order, so apportionment ties always break the same way
    std::vector<std::pair<std::string, double>> ordered;
    for (const auto& [name, _] : cfg.datasets)
      for (const auto& [d, v] : st.weights)
        if (d == name) ordered.emplace_back(d, v / total);
    st.weights = std::move(ordered);

    if (!sj.contains("until")) throw ConfigError(ctx + ": 'until' is required");
    const auto& u = sj["until"];
    if (u.is_object()) {
      detail::reject_unknown(u, {"dataset", "epochs"}, ctx + " until");
      if (!u.contains("dataset") || !u["dataset"].is_string()) throw ConfigError(ctx + ": until.dataset is required");
      st.until_dataset = u["dataset"].get<std::string>();
      st.until_epochs = u.contains("epochs") ? detail::positive_int(u["epochs"], ctx + " until.epochs") : 1;
    } else if (u.is_string()) {  // "name epochs"
      const auto s = u.get<std::string>();
      const auto sp = s.find(' ');
      st.until_dataset = s.substr(0, sp);
      st.until_epochs = 1;
      if (sp != std::string::npos) {
        const auto rest = s.substr(sp + 1);
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), st.until_epochs);
        if (ec != std::errc() || p != rest.data() + rest.size() || st.until_epochs == 0)
          throw ConfigError(ctx + ": until must look like '<dataset> <epochs>'");
      }
    } else {
      throw ConfigError(ctx + ": until must be {dataset, epochs}");
    }
    if (st.weight_of(st.until_dataset) <= 0)
      throw ConfigError(ctx + ": until dataset '" + st.until_dataset + "' needs a positive weight in this stage");

    if (sj.contains("modifiers") && !sj["modifiers"].is_null()) {
      if (!sj["modifiers"].is_array()) throw ConfigError(ctx + ": 'modifiers' must be a list");
      for (const auto& mj : sj["modifiers"]) {
        try {
          st.modifiers.push_back(modifiers::parse_modifier(mj));
        } catch (const ConfigError& e) {
          throw ConfigError(ctx + ": " + e.what());
        }
      }
      try {
        modifiers::ModifierChain check(st.modifiers, cfg.num_fields);
      } catch (const ConfigError& e) {
        throw ConfigError(ctx + ": " + e.what());
      }
    }
    cfg.stages.push_back(std::move(st));
  }
  return cfg;
}

inline TrainerConfig parse_config(std::string_view text, const fs::path& base_dir = ".") {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("configuration is not valid YAML: ") + e.what());
  }
  return config_from_json(yaml_to_json(root), base_dir);
}

inline TrainerConfig load_config(const fs::path& path) {
  return parse_config(read_file(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace corpusforge::scheduler
