#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dataforge/error.hpp"
#include "dataforge/rope.hpp"

using namespace dataforge;

TEST_CASE("kappa from the original configuration") {
  // ln(10000) / ln(4096 / 2pi), evaluated independently
  const double want = std::log(10000.0) / std::log(4096.0 / (2.0 * std::numbers::pi));
  CHECK(rope::derive_kappa(10000, 4096) == doctest::Approx(want).epsilon(1e-15));
  CHECK(rope::derive_kappa(10000, 4096) == doctest::Approx(1.42137).epsilon(1e-5));

  const double t0 = std::numbers::e * 2.0 * std::numbers::pi;  // T0/2pi = e
  CHECK(rope::derive_kappa(50.0, t0) == doctest::Approx(std::log(50.0)).epsilon(1e-12));

  CHECK_THROWS_AS(rope::derive_kappa(1.0, 4096), ValidationError);
  CHECK_THROWS_AS(rope::derive_kappa(10000, 6.0), ValidationError);
}

TEST_CASE("published bases") {
  rope::RopeConfig cfg;
  cfg.published = rope::published_bases();
  const auto a = rope::extend_base(65536, cfg);
  CHECK(a.value() == 514640);
  CHECK(std::abs(a.computed - 514640.0) / 514640.0 < 5e-4);
  const auto b = rope::extend_base(262144, cfg);
  CHECK(b.value() == 3691950);
  CHECK(std::abs(b.computed - 3691950.0) / 3691950.0 < 5e-4);
}

TEST_CASE("fixed point, monotonicity, refusal") {
  rope::RopeConfig cfg;
  const auto same = rope::extend_base(4096, cfg);
  CHECK(same.computed == doctest::Approx(10000.0).epsilon(1e-12));
  CHECK_FALSE(same.published.has_value());
  double prev = 0;
  for (double t = 4096; t <= 1 << 20; t *= 1.5) {
    const auto r = rope::extend_base(t, cfg);
    CHECK(r.computed > prev);
    prev = r.computed;
  }
  CHECK_THROWS_AS(rope::extend_base(2048, cfg), ValidationError);
}
