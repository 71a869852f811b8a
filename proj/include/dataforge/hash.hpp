#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace dataforge {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Incremental FNV-1a (64-bit). Used for document ids and artifact digests.
class Fnv1a64 {
 public:
  Fnv1a64& update(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) {
      state_ ^= b;
      state_ *= kFnvPrime;
    }
    return *this;
  }
  Fnv1a64& update(std::string_view s) {
    return update(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  Fnv1a64& update_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kFnvPrime;
    return *this;
  }
  Fnv1a64& update_u32le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  Fnv1a64& update_u64le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = kFnvOffset;
};

inline std::uint64_t fnv1a64(std::string_view s) { return Fnv1a64{}.update(s).digest(); }

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// 16 lowercase hex digits.
std::string to_hex(std::uint64_t v);
/// Parses exactly 16 hex digits; throws ValidationError otherwise.
std::uint64_t from_hex(std::string_view s);

/// Content digest of a file (FNV-1a over its bytes).
std::uint64_t file_digest(const std::filesystem::path& path);

}  // namespace dataforge
