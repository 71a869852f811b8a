#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <utility>
#include <vector>

#include "dataforge/hash.hpp"

namespace dataforge {

// Counter-free splitmix64 stream. Portable: every draw is defined here, not by
// the standard library's unspecified distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Stream keyed by a tuple of 64-bit parts, e.g. (seed, doc_id).
  static Rng keyed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t k = 0x51ed2701a3c9d5e7ULL;
    for (auto p : parts) k = hash_combine(k, p);
    return Rng(k);
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). bound == 0 returns 0.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      const auto wide = static_cast<unsigned __int128>(r) * bound;
      if (static_cast<std::uint64_t>(wide) >= limit) return static_cast<std::uint64_t>(wide >> 64);
    }
  }

  // Uniform in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == ~0ULL) return static_cast<std::int64_t>(next());
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + below(span + 1));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace dataforge
