#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/hash.hpp"
#include "corpusforge/io.hpp"
#include "corpusforge/rng.hpp"
#include "corpusforge/sentence_pair.hpp"

namespace corpusforge::scheduler {

/// One epoch of a dataset in shuffled order. The file is cut into blocks of
/// `block_lines` records; each block is shuffled and spilled to a scratch file, and
/// the blocks are visited in shuffled order. At most one block is held in memory.
/// Everything is determined by `rng`, which callers derive from
/// (seed, dataset, epoch).
///
/// While building, the file is re-fingerprinted; a mismatch with `expected` means
/// the dataset changed under a running curriculum and is fatal.
class ShuffledEpoch {
 public:
  ShuffledEpoch(const fs::path& file, const Fingerprint& expected, const Rng& rng, std::size_t block_lines,
                const fs::path& scratch_parent, int num_fields)
      : block_lines_(block_lines) {
    if (block_lines_ == 0) throw ConfigError("shuffle block size must be positive");
    LineReader reader(file);
    Sha256 digest;
    std::vector<std::string> block;
    std::string line;
    auto flush = [&] {
      Rng r = rng.derive("block").derive(static_cast<std::uint64_t>(sizes_.size()));
      r.shuffle(std::span<std::string>(block));
      sizes_.push_back(block.size());
      if (sizes_.size() == 1)
        resident_ = std::move(block);  // stays in memory if it turns out to be the only block
      else
        spill(sizes_.size() - 1, block, scratch_parent);
      block.clear();
    };
    while (reader.next(line)) {
      digest.update(line);
      digest.update("\n");
      try {
        (void)parse_tsv(line, num_fields);
      } catch (const FormatError& e) {
        throw FormatError(file.string() + ": " + e.what(), reader.lines_read());
      }
      if (!resident_.empty()) {
        spill(0, resident_, scratch_parent);
        resident_.clear();
      }
      block.push_back(std::move(line));
      ++total_;
      if (block.size() == block_lines_) flush();
    }
    if (!block.empty()) flush();
    Fingerprint fp{total_, fs::file_size(file), digest.hex_digest()};
    if (fp != expected)
      throw StateError("dataset " + file.string() + " changed while the curriculum was running (expected " +
                       std::to_string(expected.lines) + " lines, sha256 " + expected.sha256.substr(0, 12) + "; found " +
                       std::to_string(fp.lines) + " lines, sha256 " + fp.sha256.substr(0, 12) + ")");

    order_.resize(sizes_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng r = rng.derive("order");
    r.shuffle(std::span<std::size_t>(order_));
    loaded_ = sizes_.size() == 1 ? 0 : kNone;
  }

  std::uint64_t size() const noexcept { return total_; }
  std::uint64_t position() const noexcept { return position_; }
  bool exhausted() const noexcept { return position_ >= total_; }

  bool next(std::string& line) {
    if (exhausted()) return false;
    while (block_ < order_.size() && offset_ >= sizes_[order_[block_]]) {
      ++block_;
      offset_ = 0;
    }
    load(order_[block_]);
    line = resident_[offset_++];
    ++position_;
    return true;
  }

  /// Advances `n` records without returning them; whole blocks are skipped
  /// without being read.
  void skip(std::uint64_t n) {
    while (n > 0 && !exhausted()) {
      const std::uint64_t left = sizes_[order_[block_]] - offset_;
      if (n >= left) {
        n -= left;
        position_ += left;
        ++block_;
        offset_ = 0;
      } else {
        offset_ += static_cast<std::size_t>(n);
        position_ += n;
        n = 0;
      }
    }
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  void spill(std::size_t index, const std::vector<std::string>& lines, const fs::path& parent) {
    if (!scratch_) scratch_ = std::make_unique<TempDir>(parent, "corpusforge-epoch");
    std::ofstream out(scratch_->path() / std::to_string(index), std::ios::binary);
    for (const auto& l : lines) {
      out.write(l.data(), static_cast<std::streamsize>(l.size()));
      out.put('\n');
    }
    if (!out) throw IoError("cannot write shuffle spill file under " + scratch_->path().string());
  }

  void load(std::size_t index) {
    if (loaded_ == index) return;
    resident_.clear();
    std::ifstream in(scratch_->path() / std::to_string(index), std::ios::binary);
    std::string l;
    while (std::getline(in, l)) resident_.push_back(std::move(l));
    if (resident_.size() != sizes_[index]) throw IoError("shuffle spill file was truncated");
    loaded_ = index;
  }

  std::size_t block_lines_;
  std::uint64_t total_ = 0;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> order_;
  std::vector<std::string> resident_;
  std::size_t loaded_ = kNone;
  std::unique_ptr<TempDir> scratch_;
  std::size_t block_ = 0;   // index into order_
  std::size_t offset_ = 0;  // within the current block
  std::uint64_t position_ = 0;
};

}  // namespace corpusforge::scheduler
