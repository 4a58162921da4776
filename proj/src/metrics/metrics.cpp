#include "pgdm/metrics.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pgdm::metrics {

SatisfactionCurve satisfaction_curve(const std::vector<Vector>& samples,
                                     const projections::ConstraintSet& constraint,
                                     const std::vector<double>& tolerances) {
  if (samples.empty()) throw ConfigError("satisfaction_curve: no samples");
  if (!std::is_sorted(tolerances.begin(), tolerances.end())) {
    throw ConfigError("satisfaction_curve: tolerances must be ascending");
  }
  std::vector<double> dist;
  dist.reserve(samples.size());
  for (const auto& s : samples) dist.push_back(std::sqrt(constraint.distance_sq(s)));
  std::sort(dist.begin(), dist.end());

  SatisfactionCurve curve{tolerances, {}};
  for (double tol : tolerances) {
    const auto n = std::upper_bound(dist.begin(), dist.end(), tol) - dist.begin();
    curve.fraction_satisfied.push_back(static_cast<double>(n) / static_cast<double>(dist.size()));
  }
  return curve;
}

void write_curve_csv(const SatisfactionCurve& curve, std::ostream& out) {
  out << "tolerance,fraction\n";
  for (std::size_t k = 0; k < curve.tolerances.size(); ++k) {
    fmt::print(out, "{:.17g},{:.17g}\n", curve.tolerances[k], curve.fraction_satisfied[k]);
  }
}

double path_length(const Vector& path) {
  if (path.size() % 2 != 0) throw DimensionError("path_length: odd coordinate count");
  if (path.size() < 4) throw ConfigError("path_length: need at least two points");
  double total = 0.0;
  for (Eigen::Index k = 2; k < path.size(); k += 2) {
    total += std::hypot(path[k] - path[k - 2], path[k + 1] - path[k - 1]);
  }
  return total;
}

double success_rate(const std::vector<Vector>& paths, const projections::ConstraintSet& constraint,
                    double tol) {
  if (paths.empty()) throw ConfigError("success_rate: no paths");
  const auto ok = std::count_if(paths.begin(), paths.end(),
                                [&](const Vector& p) { return constraint.is_feasible(p, tol); });
  return static_cast<double>(ok) / static_cast<double>(paths.size());
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("wasserstein1_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged breakpoints.
  const double wa = 1.0 / static_cast<double>(a.size());
  const double wb = 1.0 / static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0;
  double prev = std::min(a.front(), b.front());
  double total = 0.0;
  while (ia < a.size() || ib < b.size()) {
    const bool take_a = ib == b.size() || (ia < a.size() && a[ia] <= b[ib]);
    const double x = take_a ? a[ia] : b[ib];
    total += std::abs(fa - fb) * (x - prev);
    prev = x;
    if (take_a) {
      ++ia;
      fa = static_cast<double>(ia) * wa;
    } else {
      ++ib;
      fb = static_cast<double>(ib) * wb;
    }
  }
  return total;
}

double sliced_wasserstein(const std::vector<Vector>& a, const std::vector<Vector>& b,
                          int n_projections, RngStream& rng) {
  if (a.empty() || b.empty()) throw ConfigError("sliced_wasserstein: empty sample set");
  if (n_projections < 1) throw ConfigError("sliced_wasserstein: n_projections must be >= 1");
  const Eigen::Index d = a.front().size();
  for (const auto* set : {&a, &b}) {
    for (const auto& v : *set) {
      if (v.size() != d) throw DimensionError("sliced_wasserstein: dimension mismatch");
    }
  }
  std::vector<double> pa(a.size()), pb(b.size());
  double total = 0.0;
  for (int k = 0; k < n_projections; ++k) {
    Vector dir = gaussian_noise(rng, d);
    while (dir.norm() == 0.0) dir = gaussian_noise(rng, d);
    dir.normalize();
    for (std::size_t j = 0; j < a.size(); ++j) pa[j] = dir.dot(a[j]);
    for (std::size_t j = 0; j < b.size(); ++j) pb[j] = dir.dot(b[j]);
    total += wasserstein1_1d(pa, pb);
  }
  return total / n_projections;
}

long long porosity_measure(const Vector& image, double threshold) {
  return static_cast<long long>((image.array() < threshold).count());
}

}  // namespace pgdm::metrics
