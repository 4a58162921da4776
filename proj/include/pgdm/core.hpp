#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pgdm/errors.hpp"

namespace pgdm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// StateVector
// ---------------------------------------------------------------------------

struct FlatShape {
  bool operator==(const FlatShape&) const = default;
};

/// Row-major stack of `frames` images of size height x width.
struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 1;
  bool operator==(const GridShape&) const = default;
};

/// Polyline of `n_points` 2-D points stored as x0, y0, x1, y1, ...
struct PathShape {
  std::size_t n_points = 0;
  bool operator==(const PathShape&) const = default;
};

using ShapeTag = std::variant<FlatShape, GridShape, PathShape>;

/// Number of scalars implied by a shape, or nullopt for FlatShape.
std::optional<std::size_t> shape_size(const ShapeTag& shape);
std::string shape_name(const ShapeTag& shape);

/// A single sample of the chain (pixels, waypoints or points) plus the
/// metadata needed to interpret it.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Vector values, ShapeTag shape = FlatShape{});

  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }
  const ShapeTag& shape() const noexcept { return shape_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
  bool all_finite() const;

 private:
  Vector values_;
  ShapeTag shape_ = FlatShape{};
};

/// Throws NumericError naming `context` if any entry is NaN or infinite.
void require_finite(const Vector& v, const std::string& context);

// ---------------------------------------------------------------------------
// NoiseSchedule
// ---------------------------------------------------------------------------

/// Variance-exploding noise ladder sigma_1 < ... < sigma_T with Langevin step
/// sizes gamma_t = sigma_t^2 / (2 sigma_T^2). Levels are 1-based.
///
/// The optional VP fields (beta_t, alpha_bar_t) are carried for reference and
/// conversions only; sampling always uses the sigma ladder.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> sigmas);

  int levels() const noexcept { return static_cast<int>(sigmas_.size()); }
  double sigma(int t) const;
  double gamma(int t) const;
  double sigma_max() const noexcept { return sigmas_.back(); }
  double sigma_min() const noexcept { return sigmas_.front(); }
  const std::vector<double>& sigmas() const noexcept { return sigmas_; }
  const std::vector<double>& gammas() const noexcept { return gammas_; }

  /// Returns a copy carrying VP betas (each in (0,1)); alpha_bar is derived.
  NoiseSchedule with_vp_betas(std::vector<double> betas) const;
  const std::optional<std::vector<double>>& vp_betas() const noexcept { return vp_betas_; }
  const std::optional<std::vector<double>>& vp_alpha_bars() const noexcept {
    return vp_alpha_bars_;
  }

 private:
  std::vector<double> sigmas_;
  std::vector<double> gammas_;
  std::optional<std::vector<double>> vp_betas_;
  std::optional<std::vector<double>> vp_alpha_bars_;
};

/// Geometric ladder from sigma_min (t = 1) to sigma_max (t = T).
NoiseSchedule make_geometric_schedule(double sigma_min, double sigma_max, int T);

/// Linearly spaced betas, the usual DDPM choice.
std::vector<double> linear_betas(double beta_first, double beta_last, int T);

// ---------------------------------------------------------------------------
// RngStream
// ---------------------------------------------------------------------------

/// Deterministic random stream identified by (seed, stream_id). Independent
/// chains use distinct stream ids; a stream is owned by one thread.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double normal();
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// i.i.d. standard normal vector of length `dim`.
Vector gaussian_noise(RngStream& rng, Eigen::Index dim);

}  // namespace pgdm
