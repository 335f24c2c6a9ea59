#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include "corpusforge/hash.hpp"

namespace corpusforge {

/// Counter-based random stream. The n-th draw is a pure function of (key, n), so a
/// stream is fully described by those two words and can be saved, restored, or
/// split into independent named children without disturbing its siblings.
class Rng {
 public:
  constexpr explicit Rng(std::uint64_t key = 0, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr Rng from_seed(std::uint64_t seed) noexcept {
    return Rng(mix64(seed ^ 0x6A09E667F3BCC908ULL));
  }

  /// Independent child stream identified by a name.
  constexpr Rng derive(std::string_view label) const noexcept {
    return Rng(mix64(key_ ^ mix64(fnv1a64(label) + 0x3C6EF372FE94F82BULL)));
  }

  /// Independent child stream identified by an integer (epoch, chunk, position...).
  constexpr Rng derive(std::uint64_t index) const noexcept {
    return Rng(mix64(key_ + mix64(index ^ 0xA54FF53A5F1D36F1ULL) + 0x510E527FADE682D1ULL));
  }

  constexpr std::uint64_t next() noexcept {
    return mix64(key_ ^ mix64(counter_++ * 0x9E3779B97F4A7C15ULL + 0x1F83D9ABFB41BD6BULL));
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// True with probability p; p <= 0 never fires, p >= 1 always fires.
  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, n). n must be positive.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's nearly-divisionless rejection method.
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in the closed range [lo, hi].
  constexpr std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  template <typename T>
  constexpr void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace corpusforge
