#pragma once

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/filters/builtin.hpp"
#include "corpusforge/filters/definition.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/sentence_pair.hpp"
#include "corpusforge/subprocess.hpp"

namespace corpusforge::filters {

/// The filters available to pipelines: every built-in plus discovered externals.
class FilterRegistry {
 public:
  FilterRegistry() {
    for (const auto& b : builtin_filters()) filters_.push_back(b.definition);
  }

  void add(FilterDefinition def) {
    if (find(def.name)) throw ConfigError("filter '" + def.name + "' is already defined");
    filters_.push_back(std::move(def));
  }

  const FilterDefinition* find(std::string_view name) const {
    for (const auto& f : filters_)
      if (f.name == name) return &f;
    return nullptr;
  }

  const std::vector<FilterDefinition>& all() const noexcept { return filters_; }

 private:
  std::vector<FilterDefinition> filters_;
};

struct Discovery {
  FilterRegistry registry;
  std::vector<std::string> diagnostics;  // one per skipped descriptor
};

/// Registers every `*.json` descriptor in `dir` (sorted by file name). Broken
/// descriptors are skipped and reported.
inline Discovery discover_filters(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("filter directory not readable: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  Discovery out;
  for (const auto& file : files) {
    try {
      out.registry.add(parse_filter_descriptor(json::parse(read_file(file)), fs::absolute(dir)));
    } catch (const std::exception& e) {
      out.diagnostics.push_back(file.filename().string() + ": " + e.what());
    }
  }
  return out;
}

struct FilterStep {
  std::string filter;
  json arguments = json::object();

  friend bool operator==(const FilterStep&, const FilterStep&) = default;
};

struct FilterPipeline {
  std::string dataset;
  std::vector<FilterStep> steps;

  friend bool operator==(const FilterPipeline&, const FilterPipeline&) = default;
};

inline json to_json(const FilterPipeline& p) {
  json steps = json::array();
  for (const auto& s : p.steps) steps.push_back({{"filter", s.filter}, {"arguments", s.arguments}});
  return json{{"version", 1}, {"dataset", p.dataset}, {"steps", steps}};
}

inline FilterPipeline pipeline_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("pipeline document must be a JSON object");
  if (j.contains("version") && j["version"] != 1) throw FormatError("unsupported pipeline version " + j["version"].dump());
  FilterPipeline p;
  p.dataset = j.value("dataset", "");
  const json steps = j.value("steps", json::array());
  if (!steps.is_array()) throw FormatError("\"steps\" must be an array");
  for (const auto& s : steps) {
    if (!s.is_object() || !s.contains("filter") || !s["filter"].is_string())
      throw FormatError("every step needs a \"filter\" name");
    FilterStep step{s["filter"], s.value("arguments", json::object())};
    if (!step.arguments.is_object()) throw FormatError("step arguments must be an object");
    p.steps.push_back(std::move(step));
  }
  return p;
}

inline FilterPipeline load_pipeline(const fs::path& path) {
  try {
    return pipeline_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError("invalid pipeline file " + path.string() + ": " + e.what());
  }
}

inline void save_pipeline(const fs::path& path, const FilterPipeline& pipeline) {
  write_file_atomic(path, to_json(pipeline).dump(2) + "\n");
}

namespace pipeline_detail {

inline std::string env_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

inline std::vector<std::string> split_output(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::size_t total = 0;
  for (const auto& l : lines) total += l.size() + 1;
  std::string out;
  out.reserve(total);
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

}  // namespace pipeline_detail

/// A pipeline whose steps have been resolved against a registry and whose
/// arguments have been validated. Safe to run concurrently from several threads.
class CompiledPipeline {
 public:
  CompiledPipeline(const FilterRegistry& registry, const FilterPipeline& pipeline) {
    for (const auto& step : pipeline.steps) {
      const FilterDefinition* def = registry.find(step.filter);
      if (!def) throw ConfigError("unknown filter '" + step.filter + "'");
      Step s{*def, resolve_arguments(*def, step.arguments), {}};
      if (def->kind == FilterKind::Builtin) s.builtin = compile_builtin(def->name, s.arguments);
      steps_.push_back(std::move(s));
    }
  }

  std::size_t size() const noexcept { return steps_.size(); }
  const std::string& step_name(std::size_t k) const { return steps_.at(k).definition.name; }

  /// Applies step k to a batch of TSV records.
  std::vector<std::string> run_step(std::size_t k, const std::vector<std::string>& lines, const RunLimits& limits = {}) const {
    const Step& step = steps_.at(k);
    if (step.definition.kind == FilterKind::Builtin) return run_builtin(step, lines);
    return run_external(step, lines, limits);
  }

  /// stage_outputs[0] is the input; stage_outputs[k + 1] is the output of step k.
  std::vector<std::vector<std::string>> run_all(const std::vector<std::string>& lines, const RunLimits& limits = {}) const {
    std::vector<std::vector<std::string>> stages;
    stages.reserve(steps_.size() + 1);
    stages.push_back(lines);
    for (std::size_t k = 0; k < steps_.size(); ++k) stages.push_back(run_step(k, stages.back(), limits));
    return stages;
  }

 private:
  struct Step {
    FilterDefinition definition;
    json arguments;
    RecordFilter builtin;
  };

  static std::vector<std::string> run_builtin(const Step& step, const std::vector<std::string>& lines) {
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      SentencePair pair;
      try {
        pair = parse_tsv(lines[i]);
      } catch (const FormatError& e) {
        throw PipelineError(step.definition.name, "malformed input record " + std::to_string(i + 1) + ": " + e.what());
      }
      const int fields = pair.alignment ? 3 : 2;
      if (auto kept = step.builtin(std::move(pair))) out.push_back(format_tsv(*kept, fields));
    }
    return out;
  }

  static std::vector<std::string> run_external(const Step& step, const std::vector<std::string>& lines, const RunLimits& limits) {
    const auto& def = step.definition;
    ProcessSpec spec = shell_command(def.command);
    spec.cwd = def.base_dir;
    for (const auto& [key, value] : step.arguments.items()) spec.env.emplace_back(key, pipeline_detail::env_value(value));

    const bool mono = def.scope != FilterScope::Bilingual;
    const std::size_t column = def.scope == FilterScope::MonolingualTrg ? 1 : 0;
    std::vector<std::vector<std::string>> rows;
    std::string input;
    if (mono) {
      rows.reserve(lines.size());
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto fields = split_fields(lines[i]);
        if (fields.size() < 2 || fields.size() > 3)
          throw PipelineError(def.name, "malformed input record " + std::to_string(i + 1));
        rows.emplace_back(fields.begin(), fields.end());
        input += rows.back()[column];
        input.push_back('\n');
      }
    } else {
      input = pipeline_detail::join_lines(lines);
    }

    ProcessResult result = run_process(spec, input, limits);
    if (!result.ok()) throw PipelineError(def.name, result.describe(), result.err);

    auto output = pipeline_detail::split_output(result.out);
    if (mono) {
      if (output.size() != lines.size())
        throw PipelineError(def.name,
                            "monolingual filter must emit one line per input line (got " + std::to_string(output.size()) +
                                " for " + std::to_string(lines.size()) + ")",
                            result.err);
      for (std::size_t i = 0; i < output.size(); ++i) {
        if (output[i].find('\t') != std::string::npos)
          throw PipelineError(def.name, "output line " + std::to_string(i + 1) + " contains a TAB", result.err);
        rows[i][column] = std::move(output[i]);
        output[i] = join(rows[i], "\t");
      }
    }
    for (std::size_t i = 0; i < output.size(); ++i) {
      try {
        (void)parse_tsv(output[i]);
      } catch (const FormatError& e) {
        throw PipelineError(def.name, "malformed TSV at output line " + std::to_string(i + 1) + ": " + e.what(), result.err);
      }
    }
    return output;
  }

  std::vector<Step> steps_;
};

/// Runs every step in order over `lines`, keeping each intermediate result.
inline std::vector<std::vector<std::string>> run_pipeline(const FilterRegistry& registry, const FilterPipeline& pipeline,
                                                          const std::vector<std::string>& lines, const RunLimits& limits = {}) {
  return CompiledPipeline(registry, pipeline).run_all(lines, limits);
}

}  // namespace corpusforge::filters
