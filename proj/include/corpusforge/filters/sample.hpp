#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "corpusforge/io.hpp"
#include "corpusforge/rng.hpp"

namespace corpusforge::filters {

struct SampleOptions {
  std::size_t size = 3000;
  std::size_t head = 100;
  std::size_t tail = 100;
  std::uint64_t seed = 0;
};

/// Preview sample of a dataset: its first lines, its last lines, and distinct
/// random lines from in between (kept in file order).
struct Sample {
  std::vector<std::string> head;
  std::vector<std::string> middle;
  std::vector<std::string> tail;
  std::vector<std::uint64_t> middle_indices;  // 0-based line numbers, ascending
  std::uint64_t total_lines = 0;

  std::vector<std::string> lines() const {
    std::vector<std::string> all;
    all.reserve(head.size() + middle.size() + tail.size());
    all.insert(all.end(), head.begin(), head.end());
    all.insert(all.end(), middle.begin(), middle.end());
    all.insert(all.end(), tail.begin(), tail.end());
    return all;
  }
};

/// Picks `count` distinct integers from [lo, hi) (Floyd's algorithm), sorted.
inline std::vector<std::uint64_t> choose_distinct(std::uint64_t lo, std::uint64_t hi, std::uint64_t count, Rng rng) {
  const std::uint64_t range = hi - lo;
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  for (std::uint64_t j = range - count; j < range; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    if (!chosen.insert(lo + t).second) chosen.insert(lo + j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Two passes over the file: one to count, one to collect. Only the sampled lines
/// are held in memory.
inline Sample sample_dataset(const fs::path& path, const SampleOptions& opts = {}) {
  const std::uint64_t n = count_lines(path);
  Sample s;
  s.total_lines = n;

  std::uint64_t head_n, tail_n;
  std::vector<std::uint64_t> middle;
  if (n <= opts.size) {
    head_n = std::min<std::uint64_t>(opts.head, n);
    tail_n = std::min<std::uint64_t>(opts.tail, n - head_n);
    for (std::uint64_t i = head_n; i < n - tail_n; ++i) middle.push_back(i);
  } else {
    head_n = std::min<std::uint64_t>(opts.head, opts.size);
    tail_n = std::min<std::uint64_t>(opts.tail, opts.size - head_n);
    const std::uint64_t want = opts.size - head_n - tail_n;
    middle = choose_distinct(head_n, n - tail_n, want, Rng::from_seed(opts.seed).derive("sample"));
  }

  LineReader reader(path);
  std::string line;
  std::size_t next_middle = 0;
  for (std::uint64_t i = 0; reader.next(line); ++i) {
    if (i < head_n) {
      s.head.push_back(line);
    } else if (i >= n - tail_n) {
      s.tail.push_back(line);
    } else if (next_middle < middle.size() && middle[next_middle] == i) {
      s.middle.push_back(line);
      ++next_middle;
    }
  }
  s.middle_indices = std::move(middle);
  return s;
}

}  // namespace corpusforge::filters
