#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "pgdm/core.hpp"

namespace pgdm::projections {

/// Output of a projection attempt. Exact projections always converge; the
/// non-convex trajectory solver may stop at a local, infeasible point.
struct ProjectionResult {
  Vector point;
  bool converged = true;
  /// Largest remaining constraint violation (0 when converged).
  double max_violation = 0.0;
};

/// A feasible region C with its Euclidean projection
///   P_C(x) = argmin_{y in C} ||y - x||^2.
class ConstraintSet {
 public:
  virtual ~ConstraintSet() = default;

  /// Nearest feasible point. Throws if the solver cannot reach C.
  virtual Vector project(const Vector& x) const;
  /// Like project() but reports a non-converged solve instead of throwing.
  virtual ProjectionResult try_project(const Vector& x) const;
  /// Projection of x computed from the starting point `init`. Local solvers
  /// use it to stay in the neighbourhood of a known feasible point; the
  /// default ignores it.
  virtual ProjectionResult try_project_from(const Vector& x, const Vector& init) const;
  /// ||project(x) - x||^2, the projection cost.
  virtual double distance_sq(const Vector& x) const;
  virtual bool is_feasible(const Vector& x, double tol) const = 0;
  virtual bool is_convex() const { return false; }
  virtual std::string name() const = 0;

 protected:
  virtual Vector project_impl(const Vector& x) const = 0;
};

/// The whole space; projection is the identity.
class Unconstrained final : public ConstraintSet {
 public:
  bool is_feasible(const Vector&, double) const override { return true; }
  bool is_convex() const override { return true; }
  std::string name() const override { return "unconstrained"; }
  double distance_sq(const Vector&) const override { return 0.0; }

 protected:
  Vector project_impl(const Vector& x) const override { return x; }
};

// ---------------------------------------------------------------------------
// Convex sets
// ---------------------------------------------------------------------------

/// lo <= x <= hi elementwise.
class Box final : public ConstraintSet {
 public:
  Box(Vector lo, Vector hi);
  /// Same bounds on every coordinate of a `dim`-dimensional vector.
  static Box uniform(Eigen::Index dim, double lo, double hi);

  bool is_feasible(const Vector& x, double tol) const override;
  bool is_convex() const override { return true; }
  std::string name() const override { return "box"; }
  const Vector& lo() const noexcept { return lo_; }
  const Vector& hi() const noexcept { return hi_; }

 protected:
  Vector project_impl(const Vector& x) const override;

 private:
  Vector lo_, hi_;
};

/// ||x - center|| <= radius.
class Ball final : public ConstraintSet {
 public:
  Ball(Vector center, double radius);
  bool is_feasible(const Vector& x, double tol) const override;
  bool is_convex() const override { return true; }
  std::string name() const override { return "ball"; }
  const Vector& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

 protected:
  Vector project_impl(const Vector& x) const override;

 private:
  Vector center_;
  double radius_;
};

/// a . x <= b.
class Halfspace final : public ConstraintSet {
 public:
  Halfspace(Vector normal, double offset);
  bool is_feasible(const Vector& x, double tol) const override;
  bool is_convex() const override { return true; }
  std::string name() const override { return "halfspace"; }
  const Vector& normal() const noexcept { return normal_; }
  double offset() const noexcept { return offset_; }

 protected:
  Vector project_impl(const Vector& x) const override;

 private:
  Vector normal_;
  double offset_;
  double normal_sq_;
};

/// A x = b with A of full row rank.
class Affine final : public ConstraintSet {
 public:
  Affine(Matrix A, Vector b);
  bool is_feasible(const Vector& x, double tol) const override;
  bool is_convex() const override { return true; }
  std::string name() const override { return "affine"; }

 protected:
  Vector project_impl(const Vector& x) const override;

 private:
  Matrix A_;
  Vector b_;
  Matrix gram_inverse_;  // (A A^T)^{-1}
};

/// Intersection of convex sets, projected with Dykstra's algorithm.
class Intersection final : public ConstraintSet {
 public:
  explicit Intersection(std::vector<std::shared_ptr<const ConstraintSet>> members,
                        int max_iter = 10000, double tol = 1e-10);
  bool is_feasible(const Vector& x, double tol) const override;
  bool is_convex() const override { return true; }
  std::string name() const override { return "intersection"; }

 protected:
  Vector project_impl(const Vector& x) const override;

 private:
  std::vector<std::shared_ptr<const ConstraintSet>> members_;
  int max_iter_;
  double tol_;
};

Vector project_box(const Vector& lo, const Vector& hi, const Vector& x);
Vector project_ball(const Vector& center, double radius, const Vector& x);
Vector project_halfspace(const Vector& a, double b, const Vector& x);
Vector project_affine(const Matrix& A, const Vector& b, const Vector& x);
/// Dykstra's alternating projections. Throws ConvergenceError (carrying the
/// last step size) when successive iterates still move more than `tol` after
/// `max_iter` sweeps.
Vector project_intersection_dykstra(const std::vector<const ConstraintSet*>& sets, const Vector& x,
                                    int max_iter = 10000, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Porosity (count of entries below a threshold)
// ---------------------------------------------------------------------------

/// Exactly `target_count` entries strictly below `threshold`. Flipped entries
/// are placed at threshold +/- margin.
class PorosityConstraint final : public ConstraintSet {
 public:
  PorosityConstraint(Eigen::Index target_count, double threshold = 0.0, double margin = 1e-3);

  /// Feasible iff |count_below - target| <= tol (tol in pixels).
  bool is_feasible(const Vector& x, double tol) const override;
  std::string name() const override { return "porosity"; }
  Eigen::Index target_count() const noexcept { return target_; }
  double threshold() const noexcept { return threshold_; }
  double margin() const noexcept { return margin_; }

 protected:
  Vector project_impl(const Vector& x) const override;

 private:
  Eigen::Index target_;
  double threshold_;
  double margin_;
};

Vector project_porosity(const PorosityConstraint& c, const Vector& x);

// ---------------------------------------------------------------------------
// Object placement in a stack of frames
// ---------------------------------------------------------------------------

struct Pixel {
  int row = 0;
  int col = 0;
  bool operator==(const Pixel&) const = default;
};

/// Each frame must contain exactly one object whose (rounded) pixel centroid
/// sits at that frame's target. Object pixels are those below
/// `detection_threshold`; everything else is background.
class ObjectPlacementConstraint final : public ConstraintSet {
 public:
  struct Params {
    int height = 0;
    int width = 0;
    std::vector<Pixel> targets;           // one per frame
    std::vector<Pixel> object_mask;       // offsets stamped when no object is detected
    double background = 1.0;
    double object_intensity = -1.0;
    double detection_threshold = 0.0;
  };

  explicit ObjectPlacementConstraint(Params params);

  /// Feasible iff every frame's object centroid lies within `tol` pixels of
  /// its target.
  bool is_feasible(const Vector& frames, double tol) const override;
  std::string name() const override { return "object_placement"; }
  const Params& params() const noexcept { return p_; }
  int frames() const noexcept { return static_cast<int>(p_.targets.size()); }

  /// Rounded centroid of the detected object in frame `f`, if any pixel is dark.
  std::optional<Pixel> object_center(const Vector& frames, int f) const;
  /// Largest centroid-to-target distance in pixels over all frames
  /// (infinity when a frame holds no object).
  double max_position_error(const Vector& frames) const;

 protected:
  Vector project_impl(const Vector& frames) const override;

 private:
  Params p_;
};

std::vector<Pixel> disc_mask(double radius);
Vector project_object_position(const ObjectPlacementConstraint& c, const Vector& frames);

// ---------------------------------------------------------------------------
// Obstacle-avoiding trajectories (non-convex)
// ---------------------------------------------------------------------------

struct Circle {
  std::array<double, 2> center{0.0, 0.0};
  double radius = 0.0;
};

/// Distance from point c to the segment [a, b].
double point_segment_distance(const std::array<double, 2>& c, const std::array<double, 2>& a,
                              const std::array<double, 2>& b);

struct TrajectorySolverOptions {
  int max_outer = 30;
  int max_inner = 300;
  double initial_penalty = 10.0;
  double penalty_growth = 4.0;
  double max_penalty = 1e8;
  /// Required clearance slack below which a solve counts as converged.
  double feasibility_tol = 1e-6;
};

/// Path of n_points 2-D waypoints with pinned endpoints whose segments keep
/// every obstacle center at least its radius away. The solver targets
/// radius + margin.
class TrajectoryConstraint final : public ConstraintSet {
 public:
  TrajectoryConstraint(std::vector<Circle> obstacles, std::array<double, 2> start,
                       std::array<double, 2> goal, int n_points, double margin = 0.02,
                       TrajectorySolverOptions options = {});

  ProjectionResult try_project(const Vector& path) const override;
  /// Interior-point solve started at `init`. Iterates keep a clearance of
  /// radius + min(margin, c) / 2, where c is the clearance of `init` beyond the
  /// radius, so the result is feasible whenever `init` is strictly feasible.
  /// Falls back to try_project() otherwise.
  ProjectionResult try_project_from(const Vector& path, const Vector& init) const override;
  bool is_feasible(const Vector& path, double tol) const override;
  std::string name() const override { return "trajectory"; }

  /// Largest amount by which a segment intrudes into an obstacle radius.
  double max_intrusion(const Vector& path) const;
  const std::vector<Circle>& obstacles() const noexcept { return obstacles_; }
  std::array<double, 2> start() const noexcept { return start_; }
  std::array<double, 2> goal() const noexcept { return goal_; }
  int n_points() const noexcept { return n_points_; }
  double margin() const noexcept { return margin_; }

 protected:
  Vector project_impl(const Vector& path) const override;

 private:
  Vector pin_endpoints(const Vector& path) const;

  std::vector<Circle> obstacles_;
  std::array<double, 2> start_;
  std::array<double, 2> goal_;
  int n_points_;
  double margin_;
  TrajectorySolverOptions options_;
};

Vector project_trajectory(const TrajectoryConstraint& c, const Vector& path);

}  // namespace pgdm::projections
