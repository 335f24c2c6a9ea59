#pragma once

#include <unistd.h>
#include <zlib.h>

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/error.hpp"
#include "corpusforge/hash.hpp"

namespace corpusforge {

namespace fs = std::filesystem;

/// Streams LF-terminated lines from a plain or gzip-compressed file. A trailing CR
/// is stripped; a missing final newline is tolerated.
class LineReader {
 public:
  explicit LineReader(const fs::path& path) : path_(path) {
    file_ = gzopen(path.c_str(), "rb");
    if (!file_) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    gzbuffer(file_, 1 << 17);
    buffer_.resize(1 << 16);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;
  ~LineReader() {
    if (file_) gzclose(file_);
  }

  /// Reads the next line into `line`. Returns false at end of file.
  bool next(std::string& line) {
    line.clear();
    bool partial = false;
    for (;;) {
      if (pos_ == end_) {
        if (eof_) {
          if (!partial) return false;
          if (!line.empty() && line.back() == '\r') line.pop_back();
          ++lines_;
          return true;
        }
        fill();
        continue;
      }
      const char* begin = buffer_.data() + pos_;
      const void* nl = std::memchr(begin, '\n', end_ - pos_);
      if (nl) {
        const auto n = static_cast<std::size_t>(static_cast<const char*>(nl) - begin);
        line.append(begin, n);
        pos_ += n + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lines_;
        return true;
      }
      line.append(begin, end_ - pos_);
      pos_ = end_;
      partial = true;
    }
  }

  std::uint64_t lines_read() const noexcept { return lines_; }
  const fs::path& path() const noexcept { return path_; }

 private:
  void fill() {
    const int n = gzread(file_, buffer_.data(), static_cast<unsigned>(buffer_.size()));
    if (n < 0) {
      int code = 0;
      throw IoError("read error in " + path_.string() + ": " + gzerror(file_, &code));
    }
    pos_ = 0;
    end_ = static_cast<std::size_t>(n);
    if (n == 0) eof_ = true;
  }

  fs::path path_;
  gzFile file_ = nullptr;
  std::vector<char> buffer_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  bool eof_ = false;
  std::uint64_t lines_ = 0;
};

inline std::vector<std::string> read_lines(const fs::path& path) {
  LineReader reader(path);
  std::vector<std::string> lines;
  std::string line;
  while (reader.next(line)) lines.push_back(line);
  return lines;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {
inline std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  return std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
}
}  // namespace detail

/// Writes to a temporary sibling and renames it over the target on commit().
/// Dropping an uncommitted writer removes the temporary.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(fs::path target)
      : target_(std::move(target)),
        temp_(target_.parent_path() / ("." + target_.filename().string() + ".tmp." + detail::unique_suffix())) {
    if (!target_.parent_path().empty()) fs::create_directories(target_.parent_path());
    out_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot create " + temp_.string());
  }
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;
  ~AtomicFileWriter() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      fs::remove(temp_, ec);
    }
  }

  std::ofstream& stream() noexcept { return out_; }

  void write(std::string_view data) { out_.write(data.data(), static_cast<std::streamsize>(data.size())); }

  void write_line(std::string_view line) {
    write(line);
    out_.put('\n');
  }

  void commit() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + temp_.string());
    out_.close();
    std::error_code ec;
    fs::rename(temp_, target_, ec);
    if (ec) throw IoError("cannot rename " + temp_.string() + " to " + target_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

inline void write_file_atomic(const fs::path& path, std::string_view content) {
  AtomicFileWriter w(path);
  w.write(content);
  w.commit();
}

/// Scratch directory removed (recursively) on destruction.
class TempDir {
 public:
  explicit TempDir(const fs::path& parent = {}, std::string_view prefix = "corpusforge") {
    const fs::path base = parent.empty() ? fs::temp_directory_path() : parent;
    fs::create_directories(base);
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
      fs::path candidate = base / (std::string(prefix) + "-" + detail::unique_suffix() + "-" + std::to_string(rd() & 0xFFFFFF));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw IoError("cannot create a temporary directory under " + base.string());
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    if (!path_.empty()) fs::remove_all(path_, ec);
  }

  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

/// Identity of a line-oriented file: record count plus a digest over its records,
/// each normalised to end in a single LF.
struct Fingerprint {
  std::uint64_t lines = 0;
  std::uint64_t bytes = 0;
  std::string sha256;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

inline Fingerprint fingerprint_file(const fs::path& path) {
  LineReader reader(path);
  Sha256 h;
  std::string line;
  Fingerprint fp;
  while (reader.next(line)) {
    h.update(line);
    h.update("\n");
    ++fp.lines;
  }
  fp.bytes = fs::file_size(path);
  fp.sha256 = h.hex_digest();
  return fp;
}

inline std::uint64_t count_lines(const fs::path& path) {
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
  }
  return reader.lines_read();
}

}  // namespace corpusforge
