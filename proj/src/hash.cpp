#include "dataforge/hash.hpp"

#include <array>
#include <fstream>

#include "dataforge/error.hpp"

namespace dataforge {

std::string to_hex(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t from_hex(std::string_view s) {
  if (s.size() != 16) throw ValidationError("expected 16 hex digits, got '" + std::string(s) + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
    else throw ValidationError("bad hex digit in '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Fnv1a64 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    auto n = static_cast<std::size_t>(in.gcount());
    h.update(std::span(reinterpret_cast<const std::uint8_t*>(buf.data()), n));
  }
  return h.digest();
}

}  // namespace dataforge
