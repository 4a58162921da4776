#include <fmt/format.h>

#include <cmath>

#include "pgdm/projections.hpp"

namespace pgdm::projections {

Vector project_intersection_dykstra(const std::vector<const ConstraintSet*>& sets, const Vector& x,
                                    int max_iter, double tol) {
  if (sets.empty()) return x;
  for (const auto* s : sets) {
    if (s == nullptr || !s->is_convex()) {
      throw ConfigError("Dykstra: every member must be a convex set with an exact projection");
    }
  }
  if (max_iter < 1 || !(tol > 0.0)) throw ConfigError("Dykstra: need max_iter >= 1 and tol > 0");

  Vector current = x;
  std::vector<Vector> increments(sets.size(), Vector::Zero(x.size()));
  double change = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    change = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const Vector shifted = current + increments[i];
      Vector next = sets[i]->project(shifted);
      Vector next_increment = shifted - next;
      change += (next - current).squaredNorm() + (next_increment - increments[i]).squaredNorm();
      current = std::move(next);
      increments[i] = std::move(next_increment);
    }
    if (std::sqrt(change) < tol) return current;
  }
  throw ConvergenceError(
      fmt::format("Dykstra: no convergence after {} sweeps (last change {:.3e})", max_iter,
                  std::sqrt(change)),
      std::sqrt(change));
}

Intersection::Intersection(std::vector<std::shared_ptr<const ConstraintSet>> members, int max_iter,
                           double tol)
    : members_(std::move(members)), max_iter_(max_iter), tol_(tol) {
  if (members_.empty()) throw ConfigError("Intersection: no member sets");
  for (const auto& m : members_) {
    if (!m || !m->is_convex()) throw ConfigError("Intersection: members must be convex");
  }
}

Vector Intersection::project_impl(const Vector& x) const {
  if (is_feasible(x, 0.0)) return x;
  std::vector<const ConstraintSet*> raw;
  raw.reserve(members_.size());
  for (const auto& m : members_) raw.push_back(m.get());
  return project_intersection_dykstra(raw, x, max_iter_, tol_);
}

bool Intersection::is_feasible(const Vector& x, double tol) const {
  for (const auto& m : members_) {
    if (!m->is_feasible(x, tol)) return false;
  }
  return true;
}

}  // namespace pgdm::projections
