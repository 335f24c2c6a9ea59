#pragma once

#include <json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/hash.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/sentence_pair.hpp"

namespace corpusforge::filters {

struct DedupEntry {
  fs::path input;
  fs::path output;
  std::uint64_t kept = 0;
  std::uint64_t removed = 0;
};

struct DedupReport {
  std::vector<DedupEntry> entries;

  std::uint64_t total_kept() const {
    std::uint64_t n = 0;
    for (const auto& e : entries) n += e.kept;
    return n;
  }
};

inline json to_json(const DedupReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"input", e.input.string()}, {"output", e.output.string()}, {"kept", e.kept}, {"removed", e.removed}});
  return json{{"datasets", entries}, {"total_kept", r.total_kept()}};
}

/// Removes duplicate (source, target) records across several datasets. A record
/// survives only at its first occurrence in the order the inputs are given; each
/// input's survivors go to `out_dir/<same file name>` in their original order.
/// Alignment columns do not take part in the comparison.
inline DedupReport dedupe(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::set<std::string> names;
  for (const auto& in : inputs) {
    if (!names.insert(in.filename().string()).second)
      throw ConfigError("two inputs share the file name " + in.filename().string());
    std::error_code ec;
    if (fs::equivalent(in, out_dir / in.filename(), ec)) throw ConfigError("output would overwrite input " + in.string());
  }

  std::unordered_set<Digest128, Digest128Hash> seen;
  DedupReport report;
  std::string line, key;
  for (const auto& in : inputs) {
    DedupEntry entry{in, out_dir / in.filename(), 0, 0};
    AtomicFileWriter writer(entry.output);
    LineReader reader(in);
    while (reader.next(line)) {
      const auto fields = split_fields(line);
      if (fields.size() < 2) throw FormatError(in.string() + ": record without a TAB", reader.lines_read());
      key.assign(fields[0]);
      key.push_back('\t');
      key.append(fields[1]);
      if (seen.insert(digest128(key)).second) {
        writer.write_line(line);
        ++entry.kept;
      } else {
        ++entry.removed;
      }
    }
    writer.commit();
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace corpusforge::filters
