#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "pgdm/projections.hpp"

namespace pgdm::projections {

PorosityConstraint::PorosityConstraint(Eigen::Index target_count, double threshold, double margin)
    : target_(target_count), threshold_(threshold), margin_(margin) {
  if (target_ < 0) throw ConfigError("PorosityConstraint: target count must be non-negative");
  if (!(margin_ > 0.0)) throw ConfigError("PorosityConstraint: margin must be positive");
}

bool PorosityConstraint::is_feasible(const Vector& x, double tol) const {
  const auto below = (x.array() < threshold_).count();
  return std::abs(static_cast<double>(below - target_)) <= tol;
}

// Top-k flip: the entries on the wrong side that sit nearest the threshold are
// moved just across it; the extreme values are left alone.
Vector PorosityConstraint::project_impl(const Vector& x) const {
  if (target_ > x.size()) {
    throw DimensionError(fmt::format("porosity: target count {} exceeds dimension {}", target_,
                                  x.size()));
  }
  std::vector<Eigen::Index> below;
  std::vector<Eigen::Index> above;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    (x[i] < threshold_ ? below : above).push_back(i);
  }
  const auto current = static_cast<Eigen::Index>(below.size());
  Vector y = x;
  if (current == target_) return y;

  if (current > target_) {
    const auto flips = static_cast<std::size_t>(current - target_);
    // Largest values first (closest to the threshold from below); ties by index.
    std::partial_sort(below.begin(), below.begin() + static_cast<std::ptrdiff_t>(flips),
                      below.end(), [&](Eigen::Index a, Eigen::Index b) {
                        return x[a] != x[b] ? x[a] > x[b] : a < b;
                      });
    for (std::size_t i = 0; i < flips; ++i) y[below[i]] = threshold_ + margin_;
  } else {
    const auto flips = static_cast<std::size_t>(target_ - current);
    std::partial_sort(above.begin(), above.begin() + static_cast<std::ptrdiff_t>(flips),
                      above.end(), [&](Eigen::Index a, Eigen::Index b) {
                        return x[a] != x[b] ? x[a] < x[b] : a < b;
                      });
    for (std::size_t i = 0; i < flips; ++i) y[above[i]] = threshold_ - margin_;
  }
  return y;
}

Vector project_porosity(const PorosityConstraint& c, const Vector& x) { return c.project(x); }

}  // namespace pgdm::projections
