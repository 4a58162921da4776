#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "pgdm/theory.hpp"

using namespace pgdm;
using namespace pgdm::theory;
namespace proj = pgdm::projections;

namespace {

// Smallest distance to mu reachable by one gradient step from a grid over the disc.
double rho_grid_search(const TheoremProbe& probe, const Vector& center, double radius, double step) {
  double best = std::numeric_limits<double>::infinity();
  for (double a = -radius; a <= radius; a += step) {
    for (double b = -radius; b <= radius; b += step) {
      if (a * a + b * b > radius * radius) continue;
      const Vector y = center + Vector{{a, b}};
      best = std::min(best, (gradient_step(probe, y) - probe.gmm.optimum_mean()).norm());
    }
  }
  return best;
}

}  // namespace

TEST_CASE("rho on a half-line") {
  CHECK(compute_rho(make_halfline_probe(1.0, 0.5)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(compute_rho(make_halfline_probe(1.0, 1e-9)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(compute_rho(make_halfline_probe(2.0, 0.25)) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("rho for a disc excluding the optimum matches a grid search") {
  const Vector center{{2.0, 0.5}};
  const double radius = 1.0;
  TheoremProbe probe{score::GaussianMixture::isotropic(Vector{{0.0, 0.0}}, 2.0),
                     std::make_shared<proj::Ball>(center, radius), 0.3, 0.0};
  const double step = 2e-3;
  const double oracle = rho_grid_search(probe, center, radius, step);
  CHECK(std::abs(compute_rho(probe) - oracle) <= 2.0 * step);
}

TEST_CASE("gradient criterion agrees with rho") {
  const auto probe = make_halfline_probe(1.0, 0.5);
  const double rho = compute_rho(probe);
  CHECK(satisfies_gradient_criterion(probe, Vector{{0.0}}, rho));
  CHECK(satisfies_gradient_criterion(probe, Vector{{1.0}}, rho));
  CHECK_FALSE(satisfies_gradient_criterion(probe, Vector{{1.5}}, rho));
  RngStream rng(1, 0);
  const auto region = criterion_region(probe);
  for (int k = 0; k < 1000; ++k) CHECK(satisfies_gradient_criterion(probe, region(rng), rho));
}

TEST_CASE("feasible starting points make both sides equal") {
  const auto probe = make_halfline_probe(1.0, 0.3);
  const auto r = verify_theorem1(probe, 10000, uniform_interval(1.5, 3.0), 5);
  CHECK(r.diff_mean == 0.0);
  CHECK(r.lhs_mean == r.rhs_mean);
  CHECK(r.holds);
}

TEST_CASE("infeasible starting points cost more than their projections") {
  const auto probe = make_halfline_probe(1.0, 0.3);
  const auto r = verify_theorem1(probe, 100000, uniform_interval(0.2, 0.8), 6);
  INFO("lhs " << r.lhs_mean << " +- " << r.lhs_ci << ", rhs " << r.rhs_mean << " +- " << r.rhs_ci);
  CHECK(r.lhs_mean - r.lhs_ci > r.rhs_mean + r.rhs_ci);
  CHECK(r.diff_mean - r.diff_ci > 0.0);
  CHECK(r.holds);
  CHECK(r.criterion_fraction == 1.0);
}

TEST_CASE("vanishing step recovers the starting projection cost") {
  const auto probe = make_halfline_probe(1.0, 1e-8);
  const auto r = verify_theorem1(probe, 10000, uniform_interval(0.2, 0.8), 7);
  // E[(1 - x)^2] for x uniform on [0.2, 0.8].
  const double expected = (0.8 * 0.8 * 0.8 - 0.2 * 0.2 * 0.2) / (3.0 * 0.6);
  CHECK(expected == doctest::Approx(0.28));
  CHECK(std::abs(r.lhs_mean - expected) <= 2.0 * r.lhs_ci + 1e-4);
}

TEST_CASE("too few trials are rejected") {
  CHECK_THROWS_AS(verify_theorem1(make_halfline_probe(1.0, 0.3), 100, uniform_interval(0, 1), 1),
                  ConfigError);
}

TEST_CASE("identity constraint has zero error from the first step") {
  TheoremProbe probe{score::GaussianMixture::isotropic(Vector::Zero(1), 1.0),
                     std::make_shared<proj::Unconstrained>(), 0.1, 0.0};
  const auto sched = make_geometric_schedule(0.01, 1.0, 5);
  const auto r = verify_corollary1(probe, sched, 4, 1e-3, 10, 3);
  CHECK(r.reached);
  CHECK(r.first_t == 5);
  CHECK(r.first_i == 1);
  CHECK(r.error_trace.size() == 20);
  for (double e : r.error_trace) CHECK(e == 0.0);
  CHECK(r.level_means.size() == 5);
}

TEST_CASE("an unreachable tolerance is reported") {
  const auto probe = make_halfline_probe(1.0, 0.5);
  const auto sched = make_geometric_schedule(0.5, 1.0, 3);
  const auto r = verify_corollary1(probe, sched, 2, 1e-300, 20, 3);
  CHECK_FALSE(r.reached);
  CHECK(r.final_error > 0.0);
}

TEST_CASE("projected chains drive the halfspace error down") {
  const auto probe = make_halfline_probe(1.0, 0.5);
  const auto sched = make_geometric_schedule(0.01, 1.0, 20);
  const auto r = verify_corollary1(probe, sched, 50, 1e-3, 50, 11);
  REQUIRE(r.level_means.size() == 20);
  CHECK(r.reached);
  CHECK(r.level_means.front() < r.level_means.back());
}
