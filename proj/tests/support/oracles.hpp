#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance suite. Each check_* returns whether the library agrees with the
// oracle and a short description of the comparison.

#include <functional>
#include <string>
#include <vector>

#include "pgdm/core.hpp"

namespace oracle {

struct Check {
  bool ok = false;
  std::string detail;
};

/// Dense-grid minimiser of ||y - x||^2 over {y in [lo, hi]^2 : feasible(y)}.
pgdm::Vector grid_projection_2d(const pgdm::Vector& x,
                                const std::function<bool(double, double)>& feasible, double lo,
                                double hi, double step);

/// Cheapest way to leave exactly k entries below tau, by enumerating every
/// subset of size k. Entries that must rise go to tau + delta, entries that
/// must fall go to tau - delta.
pgdm::Vector porosity_bruteforce(const pgdm::Vector& x, int k, double tau, double delta);

/// Central-difference gradient.
pgdm::Vector fd_gradient(const std::function<double(const pgdm::Vector&)>& f, const pgdm::Vector& x,
                         double h);

/// Grid search for the midpoint of the path (-span, 0), m, (span, 0) that
/// minimises |m|^2 while both segments keep distance >= clearance from the
/// origin.
std::array<double, 2> midpoint_grid_search(double span, double clearance, double step);

Check check_dykstra_grid();
Check check_porosity_bruteforce();
Check check_trajectory_midpoint();
Check check_gmm_score_fd();
Check check_mlp_backprop_fd();

}  // namespace oracle
