#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "pgdm/core.hpp"
#include "pgdm/projections.hpp"

namespace pgdm::harness {

// ---------------------------------------------------------------------------
// Falling object (physics motion)
// ---------------------------------------------------------------------------

/// Constant-acceleration positions from rest: v_t = v_{t-1} + a,
/// p_t = p_{t-1} + v_{t-1} + a/2, i.e. p_t = p0 + a t^2 / 2.
std::vector<double> compute_positions(double p0, double a, int n_frames);

struct BallMotionSpec {
  int frame_size = 64;
  int n_frames = 6;
  double gravity = 2.0;  // px/frame^2, downward
  double object_radius = 3.0;
  int n_samples = 1000;
  double train_fraction = 0.9;
  double background = 1.0;
  double object_intensity = -1.0;

  /// Reduced frame size with gravity and radius scaled from the 64 px setting.
  static BallMotionSpec scaled(int frame_size);
};

/// One video: frames stored frame-major, row-major within a frame.
struct BallSample {
  Vector frames;
  int start_row = 0;
  int column = 0;
};

struct BallDataset {
  std::vector<BallSample> train;
  std::vector<BallSample> test;
};

/// Integer-rounded object rows for a drop from `start_row` with gravity `a`.
std::vector<int> ball_rows(const BallMotionSpec& spec, int start_row, double a);

/// True when the object stays inside the frame for all frames.
bool ball_fits(const BallMotionSpec& spec, int start_row, int column, double a);

/// Renders the frame stack for a drop.
Vector render_ball(const BallMotionSpec& spec, int start_row, int column, double a);

/// Uniform integer starts on [0, frame_size - 1]; starts whose drop leaves
/// the frame are redrawn.
BallDataset gen_ball_dataset(const BallMotionSpec& spec, RngStream& rng);

/// Object-placement constraint for a drop under gravity `a`.
projections::ObjectPlacementConstraint ball_constraint(const BallMotionSpec& spec, int start_row,
                                                       int column, double a);

// ---------------------------------------------------------------------------
// Trajectories among circular obstacles
// ---------------------------------------------------------------------------

struct TopographySpec {
  int map_id = 1;
  std::vector<projections::Circle> training_obstacles;
  std::vector<projections::Circle> inference_obstacles;
  double domain_lo = -1.0;
  double domain_hi = 1.0;
  /// x-ranges for start and goal; y is drawn over the whole domain.
  std::array<double, 2> start_x{-0.9, -0.6};
  std::array<double, 2> goal_x{0.6, 0.9};

  std::vector<projections::Circle> all_obstacles() const;
};

TopographySpec load_topography(const std::filesystem::path& path);

struct Endpoints {
  std::array<double, 2> start;
  std::array<double, 2> goal;
};

/// Start/goal pair clear (by radius + margin) of every obstacle in `obstacles`.
Endpoints sample_endpoints(const TopographySpec& spec, const std::vector<projections::Circle>& obstacles,
                           double margin, RngStream& rng);

/// Straight line from start to goal with n_points waypoints.
Vector straight_path(const Endpoints& e, int n_points);

/// Feasible path among `obstacles`: straight line, projection, then
/// feasibility-preserving shortening. Throws InfeasibleError with the
/// geometry when no feasible path is found.
Vector plan_path(const Endpoints& e, const std::vector<projections::Circle>& obstacles,
                 int n_points, double margin);

struct TrajectoryDataset {
  std::vector<Vector> paths;
  std::vector<Endpoints> endpoints;
};

/// `n` paths feasible with respect to the training obstacles.
TrajectoryDataset gen_trajectory_dataset(const TopographySpec& spec, int n, int n_points,
                                         double margin, RngStream& rng);

// ---------------------------------------------------------------------------
// Porous textures
// ---------------------------------------------------------------------------

struct TextureSpec {
  int size = 64;
  double correlation_length = 3.0;  // Gaussian smoothing standard deviation in pixels
  double gain = 2.0;
  double offset_min = -0.1;
  double offset_max = 1.3;
};

/// Smoothed white noise, standardised, shifted by `offset` and squashed by
/// tanh(gain * .) into (-1, 1). Larger offsets give fewer dark pixels.
Vector texture_from_noise(const TextureSpec& spec, const Vector& white_noise, double offset);

struct TextureDataset {
  std::vector<Vector> images;
  std::vector<long long> porosity;  // count of pixels below 0
  std::vector<double> offsets;
};

TextureDataset gen_texture_dataset(const TextureSpec& spec, int n, RngStream& rng);

}  // namespace pgdm::harness
