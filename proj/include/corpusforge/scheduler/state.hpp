#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>

#include "corpusforge/error.hpp"
#include "corpusforge/io.hpp"

namespace corpusforge::scheduler {

using nlohmann::json;

inline constexpr std::string_view kStateFormat = "corpusforge-curriculum-state";
inline constexpr int kStateVersion = 1;

struct DatasetPosition {
  std::uint64_t epoch = 0;
  std::uint64_t position = 0;  // records already taken from this epoch's order

  friend bool operator==(const DatasetPosition&, const DatasetPosition&) = default;
};

/// Where a run stands. The counters describe the start of chunk `chunk_index`;
/// `chunk_offset` output lines of that chunk have already been emitted. Resuming
/// rebuilds the chunk from these counters and drops the first `chunk_offset` lines.
struct CurriculumState {
  std::string config_fingerprint;
  std::size_t stage_index = 0;
  std::string stage_name;
  std::uint64_t chunk_index = 0;
  std::uint64_t chunk_offset = 0;
  std::uint64_t lines_emitted = 0;
  bool completed = false;
  std::map<std::string, DatasetPosition> datasets;
  std::map<std::string, std::uint64_t> stage_drawn;  // records drawn per dataset in the current stage
  json rng_streams = json::object();                 // derivation labels, for humans

  friend bool operator==(const CurriculumState& a, const CurriculumState& b) {
    return a.config_fingerprint == b.config_fingerprint && a.stage_index == b.stage_index && a.chunk_index == b.chunk_index &&
           a.chunk_offset == b.chunk_offset && a.lines_emitted == b.lines_emitted && a.completed == b.completed &&
           a.datasets == b.datasets && a.stage_drawn == b.stage_drawn;
  }
};

inline json to_json(const CurriculumState& s) {
  json ds = json::object();
  for (const auto& [name, p] : s.datasets) ds[name] = {{"epoch", p.epoch}, {"position", p.position}};
  json drawn = json::object();
  for (const auto& [name, n] : s.stage_drawn) drawn[name] = n;
  return json{{"format", kStateFormat},
              {"version", kStateVersion},
              {"config_fingerprint", s.config_fingerprint},
              {"stage_index", s.stage_index},
              {"stage_name", s.stage_name},
              {"chunk_index", s.chunk_index},
              {"chunk_offset", s.chunk_offset},
              {"lines_emitted", s.lines_emitted},
              {"completed", s.completed},
              {"datasets", ds},
              {"stage_drawn", drawn},
              {"rng_streams", s.rng_streams}};
}

inline CurriculumState state_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kStateFormat) throw StateError("not a curriculum state snapshot");
    if (j.at("version").get<int>() != kStateVersion)
      throw StateError("unsupported snapshot version " + j.at("version").dump() + " (expected " + std::to_string(kStateVersion) + ")");
    CurriculumState s;
    s.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    s.stage_index = j.at("stage_index").get<std::size_t>();
    s.stage_name = j.value("stage_name", "");
    s.chunk_index = j.at("chunk_index").get<std::uint64_t>();
    s.chunk_offset = j.at("chunk_offset").get<std::uint64_t>();
    s.lines_emitted = j.at("lines_emitted").get<std::uint64_t>();
    s.completed = j.at("completed").get<bool>();
    for (const auto& [name, p] : j.at("datasets").items())
      s.datasets[name] = {p.at("epoch").get<std::uint64_t>(), p.at("position").get<std::uint64_t>()};
    for (const auto& [name, n] : j.at("stage_drawn").items()) s.stage_drawn[name] = n.get<std::uint64_t>();
    if (j.contains("rng_streams")) s.rng_streams = j["rng_streams"];
    return s;
  } catch (const json::exception& e) {
    throw StateError(std::string("corrupt curriculum snapshot: ") + e.what());
  }
}

inline void save_state(const CurriculumState& s, const fs::path& path) { write_file_atomic(path, to_json(s).dump(2) + "\n"); }

inline CurriculumState load_state(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw StateError("corrupt curriculum snapshot " + path.string() + ": " + e.what());
  }
  return state_from_json(j);
}

}  // namespace corpusforge::scheduler
