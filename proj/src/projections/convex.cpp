#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "pgdm/projections.hpp"

namespace pgdm::projections {

Vector ConstraintSet::project(const Vector& x) const { return project_impl(x); }

ProjectionResult ConstraintSet::try_project(const Vector& x) const {
  return {project_impl(x), true, 0.0};
}

ProjectionResult ConstraintSet::try_project_from(const Vector& x, const Vector&) const {
  return try_project(x);
}

double ConstraintSet::distance_sq(const Vector& x) const {
  return (try_project(x).point - x).squaredNorm();
}

namespace {

void require_dim(const Vector& x, Eigen::Index expected, const char* who) {
  if (x.size() != expected) {
    throw DimensionError(fmt::format("{}: expected dimension {}, got {}", who, expected, x.size()));
  }
}

}  // namespace

// --- Box -------------------------------------------------------------------

Box::Box(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw DimensionError("Box: lo and hi differ in dimension");
  if ((lo_.array() > hi_.array()).any()) throw ConfigError("Box: lo must not exceed hi");
}

Box Box::uniform(Eigen::Index dim, double lo, double hi) {
  return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

Vector Box::project_impl(const Vector& x) const {
  require_dim(x, lo_.size(), "Box");
  return x.cwiseMax(lo_).cwiseMin(hi_);
}

bool Box::is_feasible(const Vector& x, double tol) const {
  require_dim(x, lo_.size(), "Box");
  return ((x.array() >= lo_.array() - tol) && (x.array() <= hi_.array() + tol)).all();
}

Vector project_box(const Vector& lo, const Vector& hi, const Vector& x) {
  return Box(lo, hi).project(x);
}

// --- Ball ------------------------------------------------------------------

Ball::Ball(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius_ > 0.0)) throw ConfigError("Ball: radius must be positive");
}

Vector Ball::project_impl(const Vector& x) const {
  require_dim(x, center_.size(), "Ball");
  const Vector offset = x - center_;
  const double norm = offset.norm();
  if (norm <= radius_) return x;
  double scale = radius_ / norm;
  Vector y = center_ + scale * offset;
  // Rounding can leave y a few ulps outside; shrink until it is inside.
  for (int k = 0; k < 64 && (y - center_).norm() > radius_; ++k) {
    scale *= 1.0 - std::ldexp(1.0, k - 52);
    y = center_ + scale * offset;
  }
  return y;
}

bool Ball::is_feasible(const Vector& x, double tol) const {
  require_dim(x, center_.size(), "Ball");
  return (x - center_).norm() <= radius_ + tol;
}

Vector project_ball(const Vector& center, double radius, const Vector& x) {
  return Ball(center, radius).project(x);
}

// --- Halfspace -------------------------------------------------------------

Halfspace::Halfspace(Vector normal, double offset)
    : normal_(std::move(normal)), offset_(offset), normal_sq_(normal_.squaredNorm()) {
  if (!(normal_sq_ > 0.0)) throw ConfigError("Halfspace: normal vector must be nonzero");
}

Vector Halfspace::project_impl(const Vector& x) const {
  require_dim(x, normal_.size(), "Halfspace");
  const double excess = normal_.dot(x) - offset_;
  if (excess <= 0.0) return x;
  double step = excess / normal_sq_;
  Vector y = x - step * normal_;
  // Nudge across the boundary when rounding leaves a . y marginally above b.
  for (int k = 0; k < 64 && normal_.dot(y) > offset_; ++k) {
    step += std::ldexp(std::max(std::abs(step), 1.0), k - 52);
    y = x - step * normal_;
  }
  return y;
}

bool Halfspace::is_feasible(const Vector& x, double tol) const {
  require_dim(x, normal_.size(), "Halfspace");
  return normal_.dot(x) - offset_ <= tol * std::sqrt(normal_sq_);
}

Vector project_halfspace(const Vector& a, double b, const Vector& x) {
  return Halfspace(a, b).project(x);
}

// --- Affine ----------------------------------------------------------------

Affine::Affine(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size()) throw DimensionError("Affine: A rows must match b");
  if (A_.rows() == 0 || A_.cols() == 0) throw DimensionError("Affine: empty system");
  Eigen::FullPivLU<Matrix> lu(A_);
  if (lu.rank() < A_.rows()) {
    throw ConfigError(fmt::format("Affine: A is rank deficient (rank {} < {} rows)", lu.rank(),
                                  A_.rows()));
  }
  const Matrix gram = A_ * A_.transpose();
  gram_inverse_ = gram.llt().solve(Matrix::Identity(gram.rows(), gram.cols()));
}

Vector Affine::project_impl(const Vector& x) const {
  require_dim(x, A_.cols(), "Affine");
  return x - A_.transpose() * (gram_inverse_ * (A_ * x - b_));
}

bool Affine::is_feasible(const Vector& x, double tol) const {
  require_dim(x, A_.cols(), "Affine");
  return (A_ * x - b_).cwiseAbs().maxCoeff() <= tol;
}

Vector project_affine(const Matrix& A, const Vector& b, const Vector& x) {
  return Affine(A, b).project(x);
}

}  // namespace pgdm::projections
