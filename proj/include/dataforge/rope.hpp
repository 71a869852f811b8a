#pragma once

#include <cstdint>
#include <map>
#include <optional>

namespace dataforge::rope {

// Base frequency scaling: base(T) = (T / 2π)^κ, with κ anchored so that the
// original configuration (base0, T0) is a fixed point.
struct RopeConfig {
  double base0 = 10'000.0;
  double t0 = 4096.0;
  double kappa = 0.0;  // 0 = derive from (base0, t0)
  std::map<std::uint64_t, std::uint64_t> published;  // target length -> published base
};

/// Published base values for the 4K -> 64K and 4K -> 256K extensions.
std::map<std::uint64_t, std::uint64_t> published_bases();

/// κ = ln(base0) / ln(T0 / 2π). Throws ValidationError unless base0 > 1 and T0 > 2π.
double derive_kappa(double base0, double t0);

struct ExtendedBase {
  double computed = 0.0;
  std::uint64_t rounded = 0;               // llround(computed)
  std::optional<std::uint64_t> published;  // verbatim value when known
  double kappa = 0.0;

  /// The value to ship: the published constant when present, else rounded.
  std::uint64_t value() const { return published.value_or(rounded); }
};

/// Throws ValidationError if target < T0.
ExtendedBase extend_base(double target, const RopeConfig& config);

}  // namespace dataforge::rope
