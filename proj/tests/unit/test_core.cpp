#include <doctest.h>

#include <cmath>

#include "pgdm/core.hpp"
#include "pgdm/errors.hpp"

using namespace pgdm;

TEST_CASE("two-level ladder has the closed-form sigmas and step sizes") {
  const auto s = make_geometric_schedule(0.01, 1.0, 2);
  REQUIRE(s.levels() == 2);
  CHECK(s.sigma(1) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(s.sigma(2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.gamma(1) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(s.gamma(2) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("top-level step size is one half for any ladder") {
  for (double lo : {1e-3, 0.05, 0.7}) {
    for (double ratio : {1.5, 10.0, 1e4}) {
      const auto s = make_geometric_schedule(lo, lo * ratio, 7);
      CHECK(s.gamma(7) == doctest::Approx(0.5).epsilon(1e-14));
    }
  }
}

TEST_CASE("geometric ladder matches a high-precision evaluation at an interior level") {
  // 0.01 * (10 / 0.01)^(4/9) evaluated to 40 digits with an arbitrary-precision calculator.
  const double reference = 0.2154434690031883721759293566519350495259;
  const auto s = make_geometric_schedule(0.01, 10.0, 10);
  CHECK(s.sigma(5) == doctest::Approx(reference).epsilon(1e-14));
}

TEST_CASE("ladder is strictly increasing and step sizes follow sigma squared") {
  const auto s = make_geometric_schedule(0.02, 5.0, 12);
  for (int t = 1; t < 12; ++t) CHECK(s.sigma(t) < s.sigma(t + 1));
  for (int t = 1; t <= 12; ++t) {
    CHECK(s.gamma(t) == doctest::Approx(s.sigma(t) * s.sigma(t) / (2 * 25.0)).epsilon(1e-14));
  }
}

TEST_CASE("invalid ladders are rejected") {
  CHECK_THROWS_AS(make_geometric_schedule(0.0, 1.0, 5), ConfigError);
  CHECK_THROWS_AS(make_geometric_schedule(1.0, 0.5, 5), ConfigError);
  CHECK_THROWS_AS(make_geometric_schedule(0.1, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule({0.5, 0.2}), ConfigError);
  const auto s = make_geometric_schedule(0.1, 1.0, 4);
  CHECK_THROWS(s.sigma(0));
  CHECK_THROWS(s.sigma(5));
}

TEST_CASE("VP betas carry derived cumulative products") {
  const auto s = make_geometric_schedule(0.1, 1.0, 3).with_vp_betas({0.1, 0.2, 0.3});
  REQUIRE(s.vp_alpha_bars().has_value());
  const auto& ab = *s.vp_alpha_bars();
  CHECK(ab[0] == doctest::Approx(0.9));
  CHECK(ab[1] == doctest::Approx(0.9 * 0.8));
  CHECK(ab[2] == doctest::Approx(0.9 * 0.8 * 0.7));
  CHECK_THROWS_AS(make_geometric_schedule(0.1, 1.0, 3).with_vp_betas({0.1, 1.0, 0.3}), ConfigError);
}

TEST_CASE("rng stream is deterministic and advances") {
  RngStream a(42, 3);
  const Vector first = gaussian_noise(a, 3);
  const Vector second = gaussian_noise(a, 3);
  CHECK((first - second).norm() > 0.0);
  RngStream b(42, 3);
  CHECK(gaussian_noise(b, 3) == first);
  CHECK(gaussian_noise(b, 3) == second);
  RngStream other(42, 4);
  CHECK(gaussian_noise(other, 3) != first);
}

TEST_CASE("standard normal stream has unit moments") {
  RngStream rng(2024, 0);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean >= -0.01);
  CHECK(mean <= 0.01);
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
}

TEST_CASE("state vectors carry their shape") {
  StateVector v(Vector::Zero(12), GridShape{2, 3, 2});
  CHECK(v.dim() == 12);
  CHECK(shape_size(v.shape()) == std::optional<std::size_t>(12));
  CHECK(shape_name(PathShape{4}) == "path(4,2)");
  CHECK_FALSE(shape_size(FlatShape{}).has_value());
  CHECK_THROWS_AS(StateVector(Vector::Zero(5), GridShape{2, 3, 1}), DimensionError);
  Vector bad = Vector::Zero(2);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(require_finite(bad, "probe"), NumericError);
}
