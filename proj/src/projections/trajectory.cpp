#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgdm/projections.hpp"

namespace pgdm::projections {

namespace {

using Point = std::array<double, 2>;

struct SegmentContact {
  double distance;
  double t;     // closest point = a + t (b - a)
  Point unit;   // direction from the obstacle center to the closest point
};

SegmentContact closest_on_segment(const Point& c, const Point& a, const Point& b) {
  const double ex = b[0] - a[0];
  const double ey = b[1] - a[1];
  const double len2 = ex * ex + ey * ey;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((c[0] - a[0]) * ex + (c[1] - a[1]) * ey) / len2, 0.0, 1.0);
  const double dx = a[0] + t * ex - c[0];
  const double dy = a[1] + t * ey - c[1];
  const double d = std::hypot(dx, dy);
  // A segment through the center has no preferred side: push along +y.
  if (d == 0.0) return {0.0, t, {0.0, 1.0}};
  return {d, t, {dx / d, dy / d}};
}

Point point_at(const Vector& path, Eigen::Index i) { return {path[2 * i], path[2 * i + 1]}; }

// Augmented-Lagrangian state for one solve. Variables are the interior
// waypoints; endpoints stay fixed.
class ClearanceProblem {
 public:
  ClearanceProblem(const std::vector<Circle>& obstacles, double margin, const Vector& anchor)
      : obstacles_(obstacles), margin_(margin), anchor_(anchor),
        n_points_(anchor.size() / 2),
        multipliers_(Vector::Zero((n_points_ - 1) * static_cast<Eigen::Index>(obstacles.size()))) {}

  Eigen::Index constraint_count() const { return multipliers_.size(); }

  // g_j = (r + margin) - dist(center, segment) <= 0, one per (segment, obstacle).
  Vector constraints(const Vector& path) const {
    Vector g(constraint_count());
    Eigen::Index j = 0;
    for (Eigen::Index s = 0; s + 1 < n_points_; ++s) {
      const Point a = point_at(path, s);
      const Point b = point_at(path, s + 1);
      for (const auto& ob : obstacles_) {
        g[j++] = ob.radius + margin_ - closest_on_segment(ob.center, a, b).distance;
      }
    }
    return g;
  }

  // Penalized objective; writes the gradient over the full path (endpoint
  // entries are zeroed).
  double evaluate(const Vector& path, double mu, Vector* grad) const {
    double value = (path - anchor_).squaredNorm();
    if (grad) *grad = 2.0 * (path - anchor_);
    Eigen::Index j = 0;
    for (Eigen::Index s = 0; s + 1 < n_points_; ++s) {
      const Point a = point_at(path, s);
      const Point b = point_at(path, s + 1);
      for (const auto& ob : obstacles_) {
        const double lambda = multipliers_[j++];
        const auto contact = closest_on_segment(ob.center, a, b);
        const double g = ob.radius + margin_ - contact.distance;
        const double shifted = lambda + mu * g;
        value += (std::max(0.0, shifted) * std::max(0.0, shifted) - lambda * lambda) / (2.0 * mu);
        if (grad && shifted > 0.0) {
          // d g / d a = -(1 - t) u, d g / d b = -t u
          for (int k = 0; k < 2; ++k) {
            (*grad)[2 * s + k] -= shifted * (1.0 - contact.t) * contact.unit[k];
            (*grad)[2 * (s + 1) + k] -= shifted * contact.t * contact.unit[k];
          }
        }
      }
    }
    if (grad) {
      grad->head<2>().setZero();
      grad->tail<2>().setZero();
    }
    return value;
  }

  void update_multipliers(const Vector& g, double mu) {
    multipliers_ = (multipliers_ + mu * g).cwiseMax(0.0);
  }

 private:
  const std::vector<Circle>& obstacles_;
  double margin_;
  Vector anchor_;
  Eigen::Index n_points_;
  Vector multipliers_;
};

// Gradient descent with Barzilai-Borwein step guesses and Armijo backtracking.
void minimize_penalized(const ClearanceProblem& problem, double mu, int max_iter, Vector& path) {
  Vector grad;
  double value = problem.evaluate(path, mu, &grad);
  double step = 0.5 / (1.0 + mu);
  Vector trial_grad;
  for (int it = 0; it < max_iter; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (gnorm2 <= 1e-24) break;
    double alpha = step;
    Vector trial;
    double trial_value = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = path - alpha * grad;
      trial_value = problem.evaluate(trial, mu, &trial_grad);
      if (trial_value <= value - 1e-4 * alpha * gnorm2) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const Vector s = trial - path;
    const Vector y = trial_grad - grad;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e3) : std::min(2.0 * alpha, 1e3);
    const double decrease = value - trial_value;
    path = std::move(trial);
    grad = trial_grad;
    value = trial_value;
    if (decrease <= 1e-16 * (1.0 + std::abs(value))) break;
  }
}

// Log-barrier objective ||path - anchor||^2 - tau sum log(dist - clearance)
// over every (segment, obstacle) pair; +inf outside the strict interior.
class BarrierProblem {
 public:
  BarrierProblem(const std::vector<Circle>& obstacles, double margin, const Vector& anchor)
      : obstacles_(obstacles), margin_(margin), anchor_(anchor), n_points_(anchor.size() / 2) {}

  double min_slack(const Vector& path) const {
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s + 1 < n_points_; ++s) {
      const Point a = point_at(path, s);
      const Point b = point_at(path, s + 1);
      for (const auto& ob : obstacles_) {
        worst = std::min(worst, closest_on_segment(ob.center, a, b).distance - ob.radius - margin_);
      }
    }
    return worst;
  }

  double evaluate(const Vector& path, double tau, Vector* grad) const {
    double value = (path - anchor_).squaredNorm();
    if (grad) *grad = 2.0 * (path - anchor_);
    for (Eigen::Index s = 0; s + 1 < n_points_; ++s) {
      const Point a = point_at(path, s);
      const Point b = point_at(path, s + 1);
      for (const auto& ob : obstacles_) {
        const auto contact = closest_on_segment(ob.center, a, b);
        const double slack = contact.distance - ob.radius - margin_;
        if (!(slack > 0.0)) return std::numeric_limits<double>::infinity();
        value -= tau * std::log(slack);
        if (grad) {
          const double w = tau / slack;
          for (int k = 0; k < 2; ++k) {
            (*grad)[2 * s + k] -= w * (1.0 - contact.t) * contact.unit[k];
            (*grad)[2 * (s + 1) + k] -= w * contact.t * contact.unit[k];
          }
        }
      }
    }
    if (grad) {
      grad->head<2>().setZero();
      grad->tail<2>().setZero();
    }
    return value;
  }

 private:
  const std::vector<Circle>& obstacles_;
  double margin_;
  Vector anchor_;
  Eigen::Index n_points_;
};

// Backtracking gradient descent that rejects any step leaving the interior.
void minimize_barrier(const BarrierProblem& problem, double tau, int max_iter, Vector& path) {
  Vector grad;
  double value = problem.evaluate(path, tau, &grad);
  double step = 0.5;
  Vector trial_grad;
  for (int it = 0; it < max_iter; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (gnorm2 <= 1e-24) break;
    double alpha = step;
    Vector trial;
    double trial_value = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = path - alpha * grad;
      trial_value = problem.evaluate(trial, tau, &trial_grad);
      if (trial_value <= value - 1e-4 * alpha * gnorm2) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const Vector s = trial - path;
    const Vector y = trial_grad - grad;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1.0) : std::min(2.0 * alpha, 1.0);
    const double decrease = value - trial_value;
    path = std::move(trial);
    grad = trial_grad;
    value = trial_value;
    if (decrease <= 1e-16 * (1.0 + std::abs(value))) break;
  }
}

}  // namespace

double point_segment_distance(const std::array<double, 2>& c, const std::array<double, 2>& a,
                              const std::array<double, 2>& b) {
  return closest_on_segment(c, a, b).distance;
}

TrajectoryConstraint::TrajectoryConstraint(std::vector<Circle> obstacles,
                                           std::array<double, 2> start, std::array<double, 2> goal,
                                           int n_points, double margin,
                                           TrajectorySolverOptions options)
    : obstacles_(std::move(obstacles)), start_(start), goal_(goal), n_points_(n_points),
      margin_(margin), options_(options) {
  if (n_points_ < 2) throw ConfigError("trajectory: need at least two waypoints");
  if (!(margin_ >= 0.0)) throw ConfigError("trajectory: margin must be non-negative");
  if (options_.max_outer < 1 || options_.max_inner < 1 || !(options_.initial_penalty > 0.0) ||
      !(options_.penalty_growth > 1.0)) {
    throw ConfigError("trajectory: invalid solver options");
  }
  for (const auto& ob : obstacles_) {
    if (!(ob.radius > 0.0)) throw ConfigError("trajectory: obstacle radius must be positive");
    for (const auto& end : {start_, goal_}) {
      if (std::hypot(end[0] - ob.center[0], end[1] - ob.center[1]) < ob.radius + margin_) {
        throw InfeasibleError(fmt::format(
            "trajectory: endpoint ({:.4f}, {:.4f}) lies within the clearance of obstacle at "
            "({:.4f}, {:.4f}) r={:.4f}",
            end[0], end[1], ob.center[0], ob.center[1], ob.radius));
      }
    }
  }
}

Vector TrajectoryConstraint::pin_endpoints(const Vector& path) const {
  if (path.size() != 2 * static_cast<Eigen::Index>(n_points_)) {
    throw DimensionError(fmt::format("trajectory: expected {} coordinates, got {}", 2 * n_points_,
                                     path.size()));
  }
  Vector out = path;
  out[0] = start_[0];
  out[1] = start_[1];
  out[out.size() - 2] = goal_[0];
  out[out.size() - 1] = goal_[1];
  return out;
}

double TrajectoryConstraint::max_intrusion(const Vector& path) const {
  double worst = 0.0;
  for (Eigen::Index s = 0; s + 1 < n_points_; ++s) {
    const Point a = point_at(path, s);
    const Point b = point_at(path, s + 1);
    for (const auto& ob : obstacles_) {
      worst = std::max(worst, ob.radius - closest_on_segment(ob.center, a, b).distance);
    }
  }
  return worst;
}

bool TrajectoryConstraint::is_feasible(const Vector& path, double tol) const {
  if (path.size() != 2 * static_cast<Eigen::Index>(n_points_)) {
    throw DimensionError(fmt::format("trajectory: expected {} coordinates, got {}", 2 * n_points_,
                                     path.size()));
  }
  const Eigen::Index n = path.size();
  const double endpoint_error =
      std::max({std::abs(path[0] - start_[0]), std::abs(path[1] - start_[1]),
                std::abs(path[n - 2] - goal_[0]), std::abs(path[n - 1] - goal_[1])});
  return endpoint_error <= tol && max_intrusion(path) <= tol;
}

ProjectionResult TrajectoryConstraint::try_project(const Vector& path) const {
  Vector current = pin_endpoints(path);
  if (max_intrusion(current) <= 0.0) return {current, true, 0.0};
  if (n_points_ < 3) return {current, false, max_intrusion(current)};

  ClearanceProblem problem(obstacles_, margin_, current);
  double mu = options_.initial_penalty;
  double previous = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < options_.max_outer; ++outer) {
    minimize_penalized(problem, mu, options_.max_inner, current);
    const Vector g = problem.constraints(current);
    const double violation = std::max(0.0, g.maxCoeff());
    problem.update_multipliers(g, mu);
    if (violation <= 1e-9) break;
    if (violation > 0.25 * previous) mu = std::min(mu * options_.penalty_growth, options_.max_penalty);
    previous = violation;
  }
  const double intrusion = max_intrusion(current);
  return {current, intrusion <= options_.feasibility_tol, intrusion};
}

ProjectionResult TrajectoryConstraint::try_project_from(const Vector& path,
                                                        const Vector& init) const {
  const Vector anchor = pin_endpoints(path);
  if (max_intrusion(anchor) <= 0.0) return {anchor, true, 0.0};
  Vector current = pin_endpoints(init);
  const double clearance = BarrierProblem(obstacles_, 0.0, anchor).min_slack(current);
  if (n_points_ < 3 || !(clearance > 0.0)) return try_project(path);
  BarrierProblem problem(obstacles_, 0.5 * std::min(margin_, clearance), anchor);

  for (double tau = 1e-2; tau >= 1e-9; tau *= 0.1) {
    minimize_barrier(problem, tau, options_.max_inner, current);
  }
  const double intrusion = max_intrusion(current);
  return {current, intrusion <= 0.0, intrusion};
}

Vector TrajectoryConstraint::project_impl(const Vector& path) const {
  auto result = try_project(path);
  if (!result.converged) {
    throw ConvergenceError(
        fmt::format("trajectory projection did not reach clearance (max intrusion {:.3e})",
                    result.max_violation),
        result.max_violation);
  }
  return std::move(result.point);
}

Vector project_trajectory(const TrajectoryConstraint& c, const Vector& path) {
  return c.project(path);
}

}  // namespace pgdm::projections
