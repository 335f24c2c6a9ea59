#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/hash.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/modifiers/chain.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/scheduler/config.hpp"
#include "corpusforge/scheduler/epoch.hpp"
#include "corpusforge/scheduler/state.hpp"
#include "corpusforge/sentence_pair.hpp"

namespace corpusforge::scheduler {

/// Largest-remainder apportionment of `total` over `weights` (which sum to 1).
/// Ties in the remainder go to the earlier entry.
inline std::vector<std::uint64_t> apportion(const std::vector<double>& weights, std::uint64_t total) {
  std::vector<std::uint64_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(total);
    counts[i] = static_cast<std::uint64_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    rem.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < rem.size(); ++k) {
    if (weights[rem[k].second] <= 0) continue;
    ++counts[rem[k].second];
    ++assigned;
  }
  return counts;
}

/// SHA-256 over everything that influences the emitted stream: the stage and
/// mixing settings, the seed, and the content of every dataset.
inline std::string config_fingerprint(const TrainerConfig& cfg, const std::vector<Fingerprint>& data) {
  json datasets = json::object();
  for (std::size_t i = 0; i < cfg.datasets.size(); ++i)
    datasets[cfg.datasets[i].first] = {{"lines", data[i].lines}, {"sha256", data[i].sha256}};
  const json canonical{{"seed", cfg.seed},
                       {"num_fields", cfg.num_fields},
                       {"chunk_size", cfg.chunk_size},
                       {"shuffle_chunk_lines", cfg.shuffle_chunk_lines},
                       {"stages", cfg.document.value("stages", json::array())},
                       {"datasets", datasets}};
  return sha256_hex(canonical.dump());
}

/// Streams the curriculum one line at a time.
class Scheduler {
 public:
  explicit Scheduler(TrainerConfig cfg) : cfg_(std::move(cfg)), master_(Rng::from_seed(cfg_.seed)) {
    for (const auto& [name, path] : cfg_.datasets) {
      if (!fs::exists(path)) throw IoError("dataset '" + name + "' not found at " + path.string());
      fps_.push_back(fingerprint_file(path));
    }
    for (const auto& st : cfg_.stages) {
      const std::size_t u = cfg_.dataset_index(st.until_dataset);
      if (fps_[u].lines == 0) throw ConfigError("stage '" + st.name + "': until dataset '" + st.until_dataset + "' is empty");
      std::vector<double> w;
      for (std::size_t d = 0; d < cfg_.datasets.size(); ++d) {
        w.push_back(st.weight_of(cfg_.datasets[d].first));
        if (w.back() > 0 && fps_[d].lines == 0)
          throw ConfigError("stage '" + st.name + "' draws from empty dataset '" + cfg_.datasets[d].first + "'");
      }
      if (apportion(w, cfg_.chunk_size)[u] == 0)
        throw ConfigError("stage '" + st.name + "': '" + st.until_dataset + "' receives no lines in a chunk of " +
                          std::to_string(cfg_.chunk_size) + "; raise chunk_size or its weight");
      weights_.push_back(std::move(w));
      chains_.emplace_back(st.modifiers, cfg_.num_fields);
    }
    fingerprint_ = config_fingerprint(cfg_, fps_);
    cursors_.resize(cfg_.datasets.size());
    stage_drawn_.assign(cfg_.datasets.size(), 0);
  }

  const TrainerConfig& config() const noexcept { return cfg_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }
  const std::vector<Fingerprint>& dataset_fingerprints() const noexcept { return fps_; }
  std::size_t stage_index() const noexcept { return stage_; }
  bool completed() const noexcept { return completed_; }
  const modifiers::ModifierChain& chain(std::size_t stage) const { return chains_.at(stage); }

  /// Puts the scheduler where `s` left off. The snapshot must come from the same
  /// configuration over the same data.
  void restore(const CurriculumState& s) {
    if (s.config_fingerprint != fingerprint_)
      throw StateError("snapshot was written for a different configuration or different data (fingerprint " +
                       s.config_fingerprint.substr(0, 12) + ", current " + fingerprint_.substr(0, 12) + ")");
    if (s.stage_index > cfg_.stages.size()) throw StateError("snapshot stage index out of range");
    for (std::size_t d = 0; d < cfg_.datasets.size(); ++d) {
      const auto& name = cfg_.datasets[d].first;
      const auto it = s.datasets.find(name);
      cursors_[d] = Cursor{};
      if (it != s.datasets.end()) {
        if (it->second.position > fps_[d].lines) throw StateError("snapshot position past the end of '" + name + "'");
        cursors_[d].epoch = it->second.epoch;
        cursors_[d].position = it->second.position;
      }
      const auto jt = s.stage_drawn.find(name);
      stage_drawn_[d] = jt == s.stage_drawn.end() ? 0 : jt->second;
    }
    stage_ = s.stage_index;
    chunk_index_ = s.chunk_index;
    lines_at_chunk_start_ = s.lines_emitted - s.chunk_offset;
    buffer_.clear();
    offset_ = 0;
    completed_ = s.completed;
    have_chunk_ = false;
    if (completed_) return;
    if (s.chunk_offset > 0) {
      if (!fill()) throw StateError("snapshot points into a chunk past the end of the curriculum");
      if (s.chunk_offset > buffer_.size()) throw StateError("snapshot chunk offset exceeds the chunk");
      offset_ = s.chunk_offset;
    }
  }

  /// Next output line (TSV, no newline). False once the last stage has finished.
  bool next(std::string& line) {
    while (!have_chunk_ || offset_ >= buffer_.size()) {
      if (have_chunk_) {
        lines_at_chunk_start_ += buffer_.size();
        ++chunk_index_;
        have_chunk_ = false;
      }
      if (!fill()) return false;
    }
    line = buffer_[offset_++];
    return true;
  }

  CurriculumState state() const { return capture(offset_); }

  std::uint64_t lines_emitted() const noexcept {
    return have_chunk_ ? chunk_start_.lines_emitted + offset_ : lines_at_chunk_start_;
  }

  /// State as it was before the most recent line returned by next().
  CurriculumState state_before_last() const { return capture(offset_ > 0 ? offset_ - 1 : 0); }

 private:
  struct Cursor {
    std::uint64_t epoch = 0;
    std::uint64_t position = 0;
    std::unique_ptr<ShuffledEpoch> reader;
  };

  CurriculumState capture(std::uint64_t offset) const {
    CurriculumState s;
    s.config_fingerprint = fingerprint_;
    s.completed = completed_;
    if (have_chunk_) {
      s = chunk_start_;
      s.chunk_offset = offset;
      s.lines_emitted = chunk_start_.lines_emitted + offset;
      return s;
    }
    s.stage_index = stage_;
    s.stage_name = stage_ < cfg_.stages.size() ? cfg_.stages[stage_].name : "";
    s.chunk_index = chunk_index_;
    s.lines_emitted = lines_at_chunk_start_;
    for (std::size_t d = 0; d < cfg_.datasets.size(); ++d) {
      s.datasets[cfg_.datasets[d].first] = {cursors_[d].epoch, cursors_[d].position};
      s.stage_drawn[cfg_.datasets[d].first] = stage_drawn_[d];
    }
    s.rng_streams = {{"mixing", "seed/mixing/<chunk_index>"},
                     {"shuffling", "seed/shuffling/<dataset>/<epoch>"},
                     {"modifiers", "seed/modifiers/<stage>/<chunk_index>/<modifier>/<k>/<position>"}};
    return s;
  }

  std::string take(std::size_t d) {
    auto& c = cursors_[d];
    if (c.position >= fps_[d].lines) {
      ++c.epoch;
      c.position = 0;
      c.reader.reset();
    }
    if (!c.reader) {
      const fs::path scratch = cfg_.tmp_dir ? *cfg_.tmp_dir : fs::temp_directory_path();
      const Rng r = master_.derive("shuffling").derive(cfg_.datasets[d].first).derive(c.epoch);
      c.reader = std::make_unique<ShuffledEpoch>(cfg_.datasets[d].second, fps_[d], r, cfg_.shuffle_chunk_lines, scratch,
                                                 cfg_.num_fields);
      c.reader->skip(c.position);
    }
    std::string line;
    if (!c.reader->next(line)) throw StateError("dataset '" + cfg_.datasets[d].first + "' ended early");
    ++c.position;
    ++stage_drawn_[d];
    return line;
  }

  // Builds the chunk that starts at the current counters. False when done.
  bool fill() {
    while (stage_ < cfg_.stages.size()) {
      const auto& st = cfg_.stages[stage_];
      const std::size_t u = cfg_.dataset_index(st.until_dataset);
      if (stage_drawn_[u] < st.until_epochs * fps_[u].lines) break;
      ++stage_;
      std::fill(stage_drawn_.begin(), stage_drawn_.end(), 0);
    }
    if (stage_ >= cfg_.stages.size()) {
      completed_ = true;
      return false;
    }
    const auto& st = cfg_.stages[stage_];
    const std::size_t u = cfg_.dataset_index(st.until_dataset);
    const std::uint64_t remaining = st.until_epochs * fps_[u].lines - stage_drawn_[u];

    have_chunk_ = false;
    chunk_start_ = capture(0);
    have_chunk_ = true;

    // The last chunk of a stage is cut short so the stage ends exactly when the
    // until-dataset has delivered its epochs.
    std::vector<std::uint64_t> counts = apportion(weights_[stage_], cfg_.chunk_size);
    if (counts[u] > remaining) {
      std::optional<std::vector<std::uint64_t>> fit;
      for (std::uint64_t s = 1; s <= cfg_.chunk_size && !fit; ++s) {
        auto c = apportion(weights_[stage_], s);
        if (c[u] >= remaining) {
          c[u] = remaining;
          fit = std::move(c);
        }
      }
      counts = std::move(*fit);
    }

    std::vector<std::string> lines;
    for (std::size_t d = 0; d < counts.size(); ++d)
      for (std::uint64_t k = 0; k < counts[d]; ++k) lines.push_back(take(d));
    Rng mix = master_.derive("mixing").derive(chunk_index_);
    mix.shuffle(std::span<std::string>(lines));

    std::vector<SentencePair> pairs;
    pairs.reserve(lines.size());
    for (const auto& l : lines) {
      auto p = parse_tsv(l, cfg_.num_fields);
      if (cfg_.num_fields == 2) p.alignment.reset();
      pairs.push_back(std::move(p));
    }
    const Rng mod = master_.derive("modifiers").derive(static_cast<std::uint64_t>(stage_)).derive(chunk_index_);
    pairs = chains_[stage_].apply(std::move(pairs), mod);

    buffer_.clear();
    for (const auto& p : pairs) buffer_.push_back(format_tsv(p, cfg_.num_fields));
    offset_ = 0;
    return true;
  }

  TrainerConfig cfg_;
  Rng master_;
  std::vector<Fingerprint> fps_;
  std::vector<std::vector<double>> weights_;  // per stage, per dataset
  std::vector<modifiers::ModifierChain> chains_;
  std::string fingerprint_;

  std::vector<Cursor> cursors_;
  std::vector<std::uint64_t> stage_drawn_;
  std::size_t stage_ = 0;
  std::uint64_t chunk_index_ = 0;
  std::uint64_t lines_at_chunk_start_ = 0;
  bool completed_ = false;

  bool have_chunk_ = false;
  CurriculumState chunk_start_;
  std::vector<std::string> buffer_;
  std::size_t offset_ = 0;
};

struct RunOptions {
  std::optional<fs::path> state_file;
  std::uint64_t limit = 0;  // stop after this many lines (0: run to the end)
};

/// Writes the stream to `out`, one LF-terminated line per record. Snapshots are
/// written every `snapshot_every` lines, at stage boundaries, when `limit` is
/// reached and at the end, always after flushing `out`. When `out` fails the last
/// good snapshot is left in place and IoError is thrown.
inline CurriculumState run(Scheduler& s, std::ostream& out, const RunOptions& opts = {}) {
  const std::uint64_t every = s.config().snapshot_every;
  std::uint64_t written = 0;
  std::uint64_t last_snapshot = s.lines_emitted();
  auto snapshot = [&](const CurriculumState& st) {
    out.flush();
    if (!out) throw IoError("output write failed; last snapshot covers " + std::to_string(last_snapshot) + " lines");
    if (opts.state_file) save_state(st, *opts.state_file);
    last_snapshot = st.lines_emitted;
  };

  std::string line;
  std::size_t stage = s.stage_index();
  while (opts.limit == 0 || written < opts.limit) {
    if (!s.next(line)) break;
    if (s.stage_index() != stage) {
      stage = s.stage_index();
      snapshot(s.state_before_last());
    }
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    if (!out) throw IoError("output write failed; last snapshot covers " + std::to_string(last_snapshot) + " lines");
    ++written;
    if (s.lines_emitted() % every == 0) snapshot(s.state());
  }
  auto final_state = s.state();
  snapshot(final_state);
  return final_state;
}

}  // namespace corpusforge::scheduler
