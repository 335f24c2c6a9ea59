#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/filters/pipeline.hpp"
#include "corpusforge/io.hpp"

namespace corpusforge::filters {

struct StepCount {
  std::string name;
  std::uint64_t input_lines = 0;
  std::uint64_t output_lines = 0;
};

struct FilterReport {
  std::string dataset;
  std::uint64_t input_lines = 0;
  std::uint64_t output_lines = 0;
  std::size_t chunks = 0;
  std::vector<StepCount> steps;
};

inline json to_json(const FilterReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"filter", s.name}, {"input_lines", s.input_lines}, {"output_lines", s.output_lines}});
  return json{{"dataset", r.dataset},
              {"input_lines", r.input_lines},
              {"output_lines", r.output_lines},
              {"chunks", r.chunks},
              {"steps", steps}};
}

struct BatchOptions {
  std::size_t chunk_lines = 100000;
  std::size_t workers = 1;
  const std::atomic<bool>* cancel = nullptr;
};

/// Cuts `input` into chunks of `chunk_lines` records, runs the whole pipeline on each
/// chunk independently (up to `workers` at once) and concatenates the results in
/// chunk order. The output is byte-identical for any worker count. On failure the
/// other chunks are cancelled and nothing is written.
inline FilterReport apply_pipeline_batch(const FilterRegistry& registry, const FilterPipeline& pipeline, const fs::path& input,
                                         const fs::path& output, const BatchOptions& opts = {}) {
  if (opts.workers == 0) throw ConfigError("workers must be at least 1");
  if (opts.chunk_lines == 0) throw ConfigError("chunk_lines must be at least 1");
  const CompiledPipeline compiled(registry, pipeline);
  const fs::path out_dir = output.parent_path().empty() ? fs::path(".") : output.parent_path();
  TempDir parts(out_dir, "." + output.filename().string() + ".parts");

  LineReader reader(input);
  std::mutex read_mu;
  std::size_t next_chunk = 0;
  bool exhausted = false;

  std::atomic<bool> abort{false};
  std::mutex result_mu;
  std::exception_ptr first_error;
  FilterReport report;
  report.dataset = pipeline.dataset;
  for (std::size_t k = 0; k < compiled.size(); ++k) report.steps.push_back({compiled.step_name(k), 0, 0});

  auto worker = [&] {
    std::vector<std::string> chunk;
    std::vector<StepCount> local(compiled.size());
    std::uint64_t local_in = 0, local_out = 0;
    try {
      for (;;) {
        if (abort.load() || (opts.cancel && opts.cancel->load())) {
          abort = true;
          break;
        }
        std::size_t index;
        chunk.clear();
        {
          std::lock_guard lock(read_mu);
          if (exhausted) break;
          std::string line;
          while (chunk.size() < opts.chunk_lines && reader.next(line)) chunk.push_back(line);
          if (chunk.size() < opts.chunk_lines) exhausted = true;
          if (chunk.empty()) break;
          index = next_chunk++;
        }
        RunLimits limits;
        limits.cancel = &abort;
        local_in += chunk.size();
        std::vector<std::string> current = std::move(chunk);
        for (std::size_t k = 0; k < compiled.size(); ++k) {
          local[k].input_lines += current.size();
          current = compiled.run_step(k, current, limits);
          local[k].output_lines += current.size();
        }
        local_out += current.size();
        std::ofstream part(parts.path() / std::to_string(index), std::ios::binary);
        for (const auto& l : current) {
          part.write(l.data(), static_cast<std::streamsize>(l.size()));
          part.put('\n');
        }
        if (!part) throw IoError("cannot write chunk output under " + parts.path().string());
      }
    } catch (...) {
      std::lock_guard lock(result_mu);
      if (!first_error) first_error = std::current_exception();
      abort = true;
      return;
    }
    std::lock_guard lock(result_mu);
    report.input_lines += local_in;
    report.output_lines += local_out;
    for (std::size_t k = 0; k < local.size(); ++k) {
      report.steps[k].input_lines += local[k].input_lines;
      report.steps[k].output_lines += local[k].output_lines;
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < opts.workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  if (abort) throw Error("batch cleaning cancelled");

  AtomicFileWriter writer(output);
  for (std::size_t i = 0; i < next_chunk; ++i) {
    std::ifstream part(parts.path() / std::to_string(i), std::ios::binary);
    char buf[1 << 16];
    while (part.read(buf, sizeof buf) || part.gcount() > 0) writer.write(std::string_view(buf, static_cast<std::size_t>(part.gcount())));
  }
  writer.commit();
  report.chunks = next_chunk;
  return report;
}

}  // namespace corpusforge::filters
