#pragma once

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/io.hpp"

namespace corpusforge::filters {

using json = nlohmann::json;

enum class ParamType { String, Number, Bool, Enum };
enum class FilterKind { External, Builtin };

/// Which columns a filter sees. Monolingual filters get one column and must emit
/// exactly one line per input line.
enum class FilterScope { Bilingual, MonolingualSrc, MonolingualTrg };

inline std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::String: return "string";
    case ParamType::Number: return "number";
    case ParamType::Bool: return "bool";
    case ParamType::Enum: return "enum";
  }
  return "string";
}

inline std::string_view to_string(FilterScope s) {
  switch (s) {
    case FilterScope::Bilingual: return "bilingual";
    case FilterScope::MonolingualSrc: return "monolingual-src";
    case FilterScope::MonolingualTrg: return "monolingual-trg";
  }
  return "bilingual";
}

inline ParamType parse_param_type(std::string_view s) {
  if (s == "string" || s == "str") return ParamType::String;
  if (s == "number" || s == "float" || s == "int" || s == "integer") return ParamType::Number;
  if (s == "bool" || s == "boolean") return ParamType::Bool;
  if (s == "enum") return ParamType::Enum;
  throw FormatError("unknown parameter type '" + std::string(s) + "'");
}

inline FilterScope parse_scope(std::string_view s) {
  if (s == "bilingual") return FilterScope::Bilingual;
  if (s == "monolingual-src") return FilterScope::MonolingualSrc;
  if (s == "monolingual-trg") return FilterScope::MonolingualTrg;
  throw FormatError("unknown filter scope '" + std::string(s) + "'");
}

struct FilterParameter {
  std::string name;
  ParamType type = ParamType::String;
  json default_value;  // null when there is no default
  bool required = false;
  std::vector<std::string> values;  // allowed values for Enum
  std::string help;
};

struct FilterDefinition {
  std::string name;
  FilterKind kind = FilterKind::External;
  std::string command;  // shell command, external filters only
  std::string description;
  std::vector<FilterParameter> parameters;
  FilterScope scope = FilterScope::Bilingual;
  fs::path base_dir;  // working directory for the command

  const FilterParameter* parameter(std::string_view n) const {
    for (const auto& p : parameters)
      if (p.name == n) return &p;
    return nullptr;
  }
};

inline bool value_matches(const FilterParameter& p, const json& v) {
  switch (p.type) {
    case ParamType::String: return v.is_string();
    case ParamType::Number: return v.is_number();
    case ParamType::Bool: return v.is_boolean();
    case ParamType::Enum:
      return v.is_string() && std::find(p.values.begin(), p.values.end(), v.get<std::string>()) != p.values.end();
  }
  return false;
}

inline json to_json(const FilterParameter& p) {
  json j{{"name", p.name}, {"type", to_string(p.type)}, {"default", p.default_value}, {"required", p.required}};
  if (p.type == ParamType::Enum) j["values"] = p.values;
  if (!p.help.empty()) j["help"] = p.help;
  return j;
}

inline json to_json(const FilterDefinition& d) {
  json params = json::array();
  for (const auto& p : d.parameters) params.push_back(to_json(p));
  json j{{"name", d.name},
         {"kind", d.kind == FilterKind::Builtin ? "builtin" : "external"},
         {"scope", to_string(d.scope)},
         {"description", d.description},
         {"parameters", params}};
  if (d.kind == FilterKind::External) j["command"] = d.command;
  return j;
}

/// Parses an external filter descriptor (see docs/filter-descriptor.md).
inline FilterDefinition parse_filter_descriptor(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw FormatError("descriptor must be a JSON object");
  FilterDefinition d;
  d.kind = FilterKind::External;
  d.base_dir = base_dir;
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
    throw FormatError("descriptor is missing \"name\"");
  d.name = j["name"];
  if (!j.contains("command") || !j["command"].is_string() || j["command"].get<std::string>().empty())
    throw FormatError("descriptor '" + d.name + "' is missing \"command\"");
  d.command = j["command"];
  d.description = j.value("description", "");
  d.scope = parse_scope(j.value("scope", "bilingual"));

  std::set<std::string> seen;
  const json params = j.value("parameters", json::array());
  if (!params.is_array()) throw FormatError("descriptor '" + d.name + "': \"parameters\" must be an array");
  for (const auto& pj : params) {
    FilterParameter p;
    if (!pj.is_object() || !pj.contains("name") || !pj["name"].is_string())
      throw FormatError("descriptor '" + d.name + "': parameter without a name");
    p.name = pj["name"];
    if (!seen.insert(p.name).second) throw FormatError("descriptor '" + d.name + "': duplicate parameter '" + p.name + "'");
    p.type = parse_param_type(pj.value("type", "string"));
    p.required = pj.value("required", false);
    p.help = pj.value("help", "");
    if (p.type == ParamType::Enum) {
      if (!pj.contains("values") || !pj["values"].is_array() || pj["values"].empty())
        throw FormatError("descriptor '" + d.name + "': enum parameter '" + p.name + "' needs \"values\"");
      p.values = pj["values"].get<std::vector<std::string>>();
    }
    p.default_value = pj.contains("default") ? pj["default"] : json(nullptr);
    if (!p.default_value.is_null() && !value_matches(p, p.default_value))
      throw FormatError("descriptor '" + d.name + "': default of '" + p.name + "' does not match its type");
    d.parameters.push_back(std::move(p));
  }
  return d;
}

/// Binds `args` against the definition: rejects unknown names and mistyped values,
/// fills defaults, and requires every parameter to end up bound.
inline json resolve_arguments(const FilterDefinition& def, const json& args) {
  if (!args.is_null() && !args.is_object()) throw ConfigError("arguments for '" + def.name + "' must be an object");
  json resolved = json::object();
  if (args.is_object()) {
    for (const auto& [key, value] : args.items()) {
      const FilterParameter* p = def.parameter(key);
      if (!p) throw ConfigError("filter '" + def.name + "' has no parameter '" + key + "'");
      if (!value_matches(*p, value))
        throw ConfigError("filter '" + def.name + "': parameter '" + key + "' expects " + std::string(to_string(p->type)));
      resolved[key] = value;
    }
  }
  for (const auto& p : def.parameters) {
    if (resolved.contains(p.name)) continue;
    if (!p.default_value.is_null()) {
      resolved[p.name] = p.default_value;
    } else if (p.required) {
      throw ConfigError("filter '" + def.name + "': required parameter '" + p.name + "' is not set");
    }
  }
  return resolved;
}

}  // namespace corpusforge::filters
