#include "dataforge/rope.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dataforge/error.hpp"

namespace dataforge::rope {

std::map<std::uint64_t, std::uint64_t> published_bases() {
  return {{65'536, 514'640}, {262'144, 3'691'950}};
}

double derive_kappa(double base0, double t0) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (!(base0 > 1.0)) throw ValidationError("base0 must be > 1, got " + std::to_string(base0));
  if (!(t0 > two_pi)) throw ValidationError("t0 must be > 2*pi, got " + std::to_string(t0));
  return std::log(base0) / std::log(t0 / two_pi);
}

ExtendedBase extend_base(double target, const RopeConfig& config) {
  if (!(target >= config.t0)) {
    throw ValidationError("target length " + std::to_string(target) + " is below the original context " +
                          std::to_string(config.t0) + "; shrinking is not supported");
  }
  ExtendedBase out;
  out.kappa = config.kappa > 0.0 ? config.kappa : derive_kappa(config.base0, config.t0);
  out.computed = std::exp(out.kappa * std::log(target / (2.0 * std::numbers::pi)));
  out.rounded = static_cast<std::uint64_t>(std::llround(out.computed));
  if (target == std::floor(target)) {
    if (auto it = config.published.find(static_cast<std::uint64_t>(target)); it != config.published.end()) {
      out.published = it->second;
    }
  }
  return out;
}

}  // namespace dataforge::rope
