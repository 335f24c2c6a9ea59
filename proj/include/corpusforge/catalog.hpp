#pragma once

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "corpusforge/dataset_layout.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/sentence_pair.hpp"

namespace corpusforge::catalog {

using json = nlohmann::json;

/// One downloadable corpus. Either url_src + url_trg (two aligned plain-text files)
/// or url_tsv (a single source TAB target file) is set.
struct DatasetDescriptor {
  std::string name;
  std::string src_lang;
  std::string trg_lang;
  std::optional<std::string> url_src;
  std::optional<std::string> url_trg;
  std::optional<std::string> url_tsv;
  std::optional<std::uint64_t> declared_lines;
  std::optional<std::uint64_t> size_bytes;
  std::optional<std::string> info_url;

  friend bool operator==(const DatasetDescriptor&, const DatasetDescriptor&) = default;
};

struct Catalog {
  std::vector<DatasetDescriptor> datasets;

  const DatasetDescriptor* find(std::string_view name) const {
    for (const auto& d : datasets)
      if (d.name == name) return &d;
    return nullptr;
  }
};

namespace detail {

inline std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

inline std::optional<std::uint64_t> opt_count(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<std::int64_t>() >= 0))
    throw FormatError(std::string("field '") + key + "' must be a nonnegative integer or null");
  return j[key].get<std::uint64_t>();
}

}  // namespace detail

inline DatasetDescriptor descriptor_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("catalog record must be a JSON object");
  DatasetDescriptor d;
  d.name = detail::opt_string(j, "name").value_or("");
  d.src_lang = detail::opt_string(j, "src_lang").value_or("");
  d.trg_lang = detail::opt_string(j, "trg_lang").value_or("");
  d.url_src = detail::opt_string(j, "url_src");
  d.url_trg = detail::opt_string(j, "url_trg");
  d.url_tsv = detail::opt_string(j, "url_tsv");
  d.declared_lines = detail::opt_count(j, "declared_lines");
  d.size_bytes = detail::opt_count(j, "size_bytes");
  d.info_url = detail::opt_string(j, "info_url");

  if (!layout::valid_dataset_name(d.name)) throw FormatError("missing or invalid dataset name '" + d.name + "'");
  if (d.src_lang.empty() || d.trg_lang.empty()) throw FormatError("dataset '" + d.name + "' needs src_lang and trg_lang");
  const bool pair_urls = d.url_src && d.url_trg;
  const bool partial = static_cast<bool>(d.url_src) != static_cast<bool>(d.url_trg);
  if (partial || pair_urls == static_cast<bool>(d.url_tsv))
    throw FormatError("dataset '" + d.name + "' needs exactly one of {url_src + url_trg, url_tsv}");
  return d;
}

inline json to_json(const DatasetDescriptor& d) {
  json j{{"name", d.name}, {"src_lang", d.src_lang}, {"trg_lang", d.trg_lang}};
  if (d.url_src) j["url_src"] = *d.url_src;
  if (d.url_trg) j["url_trg"] = *d.url_trg;
  if (d.url_tsv) j["url_tsv"] = *d.url_tsv;
  j["declared_lines"] = d.declared_lines ? json(*d.declared_lines) : json(nullptr);
  j["size_bytes"] = d.size_bytes ? json(*d.size_bytes) : json(nullptr);
  j["info_url"] = d.info_url ? json(*d.info_url) : json(nullptr);
  return j;
}

/// Parses the catalog format: JSON Lines, one dataset object per line. Blank lines
/// and lines starting with '#' are ignored.
inline Catalog parse_catalog(std::string_view text) {
  Catalog catalog;
  std::set<std::string, std::less<>> names;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    DatasetDescriptor d;
    try {
      d = descriptor_from_json(j);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), line_no);
    }
    if (!names.insert(d.name).second) throw FormatError("duplicate dataset name '" + d.name + "'", line_no);
    catalog.datasets.push_back(std::move(d));
  }
  return catalog;
}

inline Catalog load_catalog(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("catalog not found: " + path.string());
  return parse_catalog(read_file(path));
}

/// Entries whose language pair is exactly (src, trg), in catalog order.
inline std::vector<DatasetDescriptor> search_datasets(const Catalog& catalog, std::string_view src, std::string_view trg) {
  std::vector<DatasetDescriptor> out;
  std::copy_if(catalog.datasets.begin(), catalog.datasets.end(), std::back_inserter(out),
               [&](const DatasetDescriptor& d) { return d.src_lang == src && d.trg_lang == trg; });
  return out;
}

// ---------------------------------------------------------------------------
// Sidecar metadata
// ---------------------------------------------------------------------------

struct DatasetMeta {
  std::string name;
  std::optional<std::string> label;
  std::optional<std::uint64_t> line_count;
  std::optional<DatasetDescriptor> descriptor;
};

inline json to_json(const DatasetMeta& m) {
  json j{{"version", 1}, {"name", m.name}};
  j["label"] = m.label ? json(*m.label) : json(nullptr);
  j["line_count"] = m.line_count ? json(*m.line_count) : json(nullptr);
  j["provenance"] = m.descriptor ? to_json(*m.descriptor) : json(nullptr);
  return j;
}

/// Reads `<name>.meta` next to the dataset; a missing file yields defaults.
inline DatasetMeta read_meta(const fs::path& tsv) {
  DatasetMeta m;
  m.name = layout::dataset_name(tsv);
  const auto path = layout::meta_path(tsv);
  if (!fs::exists(path)) return m;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError("corrupt metadata " + path.string() + ": " + e.what());
  }
  m.label = detail::opt_string(j, "label");
  m.line_count = detail::opt_count(j, "line_count");
  if (j.contains("provenance") && !j["provenance"].is_null()) m.descriptor = descriptor_from_json(j["provenance"]);
  return m;
}

inline void write_meta(const fs::path& tsv, const DatasetMeta& meta) {
  write_file_atomic(layout::meta_path(tsv), to_json(meta).dump(2) + "\n");
}

struct LocalDataset {
  DatasetDescriptor descriptor;
  fs::path path;
  std::uint64_t line_count = 0;
  std::optional<std::string> label;
  std::vector<std::string> warnings;
};

/// Persists `label` in the dataset's sidecar. Last write wins.
inline LocalDataset set_label(LocalDataset dataset, std::string label) {
  static std::mutex mu;  // serialises read-modify-write of sidecars within the process
  std::lock_guard lock(mu);
  DatasetMeta meta = read_meta(dataset.path);
  meta.label = label;
  if (!meta.line_count) meta.line_count = dataset.line_count;
  if (!meta.descriptor && !dataset.descriptor.src_lang.empty()) meta.descriptor = dataset.descriptor;  // only real catalog entries
  write_meta(dataset.path, meta);
  dataset.label = std::move(label);
  return dataset;
}

/// Opens an existing dataset file, preferring the line count recorded in its
/// sidecar and counting otherwise.
inline LocalDataset open_local(const fs::path& tsv) {
  if (!fs::is_regular_file(tsv)) throw IoError("dataset not found: " + tsv.string());
  const DatasetMeta meta = read_meta(tsv);
  LocalDataset d;
  d.path = tsv;
  d.descriptor = meta.descriptor.value_or(DatasetDescriptor{});
  if (d.descriptor.name.empty()) d.descriptor.name = layout::dataset_name(tsv);
  d.label = meta.label;
  d.line_count = meta.line_count ? *meta.line_count : count_lines(tsv);
  return d;
}

// ---------------------------------------------------------------------------
// Fetching
// ---------------------------------------------------------------------------

struct FetchOptions {
  int attempts = 3;
  std::chrono::seconds timeout{120};
  std::chrono::milliseconds backoff{500};
};

namespace detail {

struct ParsedUrl {
  std::string scheme;
  std::string host_port;
  std::string path;
};

inline ParsedUrl parse_http_url(const std::string& url) {
  const auto sep = url.find("://");
  ParsedUrl u;
  u.scheme = url.substr(0, sep);
  const auto rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  u.host_port = rest.substr(0, slash);
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  return u;
}

// Client errors other than timeouts and throttling will not improve on retry.
[[noreturn]] inline void http_status_error(const std::string& url, int status) {
  const std::string msg = "GET " + url + " returned HTTP " + std::to_string(status);
  if (status >= 400 && status < 500 && status != 408 && status != 429) throw IoError(msg);
  throw RetryableError(msg);
}

inline void fetch_once(const std::string& url, const fs::path& dest, const FetchOptions& opts) {
  if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0) {
    const auto u = parse_http_url(url);
    httplib::Client client(u.scheme + "://" + u.host_port);
    client.set_follow_location(true);
    client.set_connection_timeout(opts.timeout);
    client.set_read_timeout(opts.timeout);
    std::ofstream out(dest, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + dest.string());
    int status = 0;
    auto res = client.Get(
        u.path,
        [&](const httplib::Response& r) {
          status = r.status;
          return r.status == 200;
        },
        [&](const char* data, std::size_t n) {
          out.write(data, static_cast<std::streamsize>(n));
          return static_cast<bool>(out);
        });
    if (!res) {
      if (status != 0 && status != 200) http_status_error(url, status);
      throw RetryableError("GET " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) http_status_error(url, res->status);
    out.close();
    if (!out) throw IoError("write failed for " + dest.string());
    return;
  }
  fs::path source = url.rfind("file://", 0) == 0 ? fs::path(url.substr(7)) : fs::path(url);
  if (!fs::is_regular_file(source)) throw IoError("no such file: " + source.string());
  fs::copy_file(source, dest, fs::copy_options::overwrite_existing);
}

}  // namespace detail

/// Copies `url` to `dest`. http(s) URLs go over the network and are retried;
/// file:// URLs and bare paths are copied locally.
inline void fetch_url(const std::string& url, const fs::path& dest, const FetchOptions& opts = {}) {
  for (int attempt = 1;; ++attempt) {
    try {
      detail::fetch_once(url, dest, opts);
      return;
    } catch (const RetryableError&) {
      if (attempt >= opts.attempts) throw;
      std::this_thread::sleep_for(opts.backoff * attempt);
    }
  }
}

/// Downloads a catalog entry into `dest/<name>.tsv`, decompressing and zipping two-file
/// corpora into a single TSV. An existing label in the sidecar is kept.
inline LocalDataset download_dataset(const DatasetDescriptor& descriptor, const fs::path& dest, const FetchOptions& opts = {}) {
  layout::require_valid_name(descriptor.name);
  fs::create_directories(dest);
  TempDir scratch(dest, "." + descriptor.name + ".download");
  const fs::path target = layout::tsv_path(dest, descriptor.name);
  AtomicFileWriter writer(target);
  std::uint64_t lines = 0;

  auto suffix_of = [](const std::string& url) { return url.size() > 3 && url.ends_with(".gz") ? ".gz" : ""; };

  if (descriptor.url_tsv) {
    const fs::path raw = scratch.path() / (std::string("data.tsv") + suffix_of(*descriptor.url_tsv));
    fetch_url(*descriptor.url_tsv, raw, opts);
    LineReader reader(raw);
    std::string line;
    std::size_t expected_fields = 0;
    while (reader.next(line)) {
      ++lines;
      const auto nfields = split_fields(line).size();
      if (nfields != 2 && nfields != 3)
        throw FormatError(descriptor.name + ": expected 2 or 3 tab-separated fields, got " + std::to_string(nfields), lines);
      if (expected_fields == 0) expected_fields = nfields;
      if (nfields != expected_fields)
        throw FormatError(descriptor.name + ": inconsistent field count (" + std::to_string(nfields) + " vs " +
                              std::to_string(expected_fields) + ")",
                          lines);
      writer.write_line(line);
    }
  } else {
    const fs::path src_raw = scratch.path() / (std::string("src") + suffix_of(*descriptor.url_src));
    const fs::path trg_raw = scratch.path() / (std::string("trg") + suffix_of(*descriptor.url_trg));
    fetch_url(*descriptor.url_src, src_raw, opts);
    fetch_url(*descriptor.url_trg, trg_raw, opts);
    const auto src_count = count_lines(src_raw);
    const auto trg_count = count_lines(trg_raw);
    if (src_count != trg_count)
      throw FormatError(descriptor.name + ": source has " + std::to_string(src_count) + " lines but target has " +
                        std::to_string(trg_count));
    LineReader src(src_raw), trg(trg_raw);
    std::string s, t;
    while (src.next(s) && trg.next(t)) {
      ++lines;
      if (s.find('\t') != std::string::npos || t.find('\t') != std::string::npos)
        throw FormatError(descriptor.name + ": TAB inside a source or target sentence", lines);
      writer.write(s);
      writer.write("\t");
      writer.write_line(t);
    }
  }
  writer.commit();

  LocalDataset result;
  result.descriptor = descriptor;
  result.path = target;
  result.line_count = lines;
  if (descriptor.declared_lines && *descriptor.declared_lines != lines)
    result.warnings.push_back(descriptor.name + ": catalog declares " + std::to_string(*descriptor.declared_lines) +
                              " lines, downloaded " + std::to_string(lines));

  DatasetMeta meta = read_meta(target);
  meta.line_count = lines;
  meta.descriptor = descriptor;
  write_meta(target, meta);
  result.label = meta.label;
  return result;
}

struct DownloadOutcome {
  std::string name;
  std::optional<LocalDataset> dataset;
  std::string error;  // empty on success
};

/// Downloads several datasets, one worker per dataset up to `workers` at a time.
/// Outcomes are returned in input order.
inline std::vector<DownloadOutcome> download_all(const std::vector<DatasetDescriptor>& descriptors, const fs::path& dest,
                                                 std::size_t workers = 4, const FetchOptions& opts = {}) {
  std::vector<DownloadOutcome> outcomes(descriptors.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < descriptors.size();) {
      outcomes[i].name = descriptors[i].name;
      try {
        outcomes[i].dataset = download_dataset(descriptors[i], dest, opts);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, std::min(workers, descriptors.size())); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return outcomes;
}

}  // namespace corpusforge::catalog
