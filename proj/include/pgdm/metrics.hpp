#pragma once

#include <iosfwd>
#include <vector>

#include "pgdm/core.hpp"
#include "pgdm/projections.hpp"

namespace pgdm::metrics {

struct SatisfactionCurve {
  std::vector<double> tolerances;
  std::vector<double> fraction_satisfied;
};

/// Fraction of samples whose projection distance sqrt(distance_sq) is within
/// each tolerance. Tolerances must be ascending.
SatisfactionCurve satisfaction_curve(const std::vector<Vector>& samples,
                                     const projections::ConstraintSet& constraint,
                                     const std::vector<double>& tolerances);

/// CSV with header tolerance,fraction.
void write_curve_csv(const SatisfactionCurve& curve, std::ostream& out);

/// Sum of segment lengths of a path stored as (x0, y0, x1, y1, ...).
double path_length(const Vector& path);

/// Fraction of paths with constraint.is_feasible(path, tol).
double success_rate(const std::vector<Vector>& paths, const projections::ConstraintSet& constraint,
                    double tol = 1e-6);

/// Exact 1-D Wasserstein-1 distance between two empirical distributions.
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

/// Mean 1-D W1 over `n_projections` uniformly random unit directions.
double sliced_wasserstein(const std::vector<Vector>& a, const std::vector<Vector>& b,
                          int n_projections, RngStream& rng);

/// Number of entries strictly below `threshold`.
long long porosity_measure(const Vector& image, double threshold = 0.0);

}  // namespace pgdm::metrics
