#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"

// On-disk layout shared by the CLI and the service: a dataset named N lives in
// `<dir>/N.tsv` (or `N.tsv.gz`), with sidecars `<dir>/N.meta` and `<dir>/N.filters.json`.
namespace corpusforge::layout {

namespace fs = std::filesystem;

inline bool valid_dataset_name(std::string_view name) {
  if (name.empty() || name.size() > 200 || name == "." || name == "..") return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.' || c == '+';
    if (!ok) return false;
  }
  return true;
}

inline void require_valid_name(std::string_view name) {
  if (!valid_dataset_name(name)) throw FormatError("invalid dataset name '" + std::string(name) + "'");
}

inline bool is_dataset_file(const fs::path& p) {
  const auto name = p.filename().string();
  auto ends_with = [&](std::string_view suffix) {
    return name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".tsv") || ends_with(".tsv.gz");
}

/// "dir/europarl.tsv.gz" -> "europarl".
inline std::string dataset_name(const fs::path& tsv) {
  std::string name = tsv.filename().string();
  for (std::string_view suffix : {std::string_view(".tsv.gz"), std::string_view(".tsv")}) {
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      name.resize(name.size() - suffix.size());
      break;
    }
  }
  return name;
}

inline fs::path tsv_path(const fs::path& dir, std::string_view name) { return dir / (std::string(name) + ".tsv"); }

inline fs::path meta_path(const fs::path& tsv) { return tsv.parent_path() / (dataset_name(tsv) + ".meta"); }

inline fs::path pipeline_path(const fs::path& tsv) {
  return tsv.parent_path() / (dataset_name(tsv) + ".filters.json");
}

/// Dataset files directly inside `dir`, sorted by name.
inline std::vector<fs::path> list_datasets(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_dataset_file(entry.path()) && entry.path().filename().string()[0] != '.')
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// Finds `<dir>/<name>.tsv` or `<dir>/<name>.tsv.gz`; empty path when absent.
inline fs::path find_dataset(const fs::path& dir, std::string_view name) {
  if (!valid_dataset_name(name)) return {};
  for (const char* suffix : {".tsv", ".tsv.gz"}) {
    fs::path p = dir / (std::string(name) + suffix);
    if (fs::is_regular_file(p)) return p;
  }
  return {};
}

}  // namespace corpusforge::layout
