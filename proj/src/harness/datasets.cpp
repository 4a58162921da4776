#include "pgdm/harness/datasets.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace pgdm::harness {

std::vector<double> compute_positions(double p0, double a, int n_frames) {
  if (n_frames < 1) throw ConfigError("compute_positions: n_frames must be >= 1");
  std::vector<double> p(static_cast<std::size_t>(n_frames));
  p[0] = p0;
  double v = 0.0;
  for (std::size_t t = 1; t < p.size(); ++t) {
    p[t] = p[t - 1] + v + 0.5 * a;
    v += a;
  }
  return p;
}

BallMotionSpec BallMotionSpec::scaled(int frame_size) {
  BallMotionSpec s;
  s.frame_size = frame_size;
  s.gravity = 2.0 * frame_size / 64.0;
  s.object_radius = std::max(1.0, std::round(3.0 * frame_size / 64.0));
  return s;
}

std::vector<int> ball_rows(const BallMotionSpec& spec, int start_row, double a) {
  std::vector<int> rows;
  for (double p : compute_positions(start_row, a, spec.n_frames)) {
    rows.push_back(static_cast<int>(std::floor(p + 0.5)));
  }
  return rows;
}

bool ball_fits(const BallMotionSpec& spec, int start_row, int column, double a) {
  const int r = static_cast<int>(std::floor(spec.object_radius));
  if (column - r < 0 || column + r >= spec.frame_size) return false;
  for (int row : ball_rows(spec, start_row, a)) {
    if (row - r < 0 || row + r >= spec.frame_size) return false;
  }
  return true;
}

Vector render_ball(const BallMotionSpec& spec, int start_row, int column, double a) {
  if (!ball_fits(spec, start_row, column, a)) {
    throw ConfigError(fmt::format("render_ball: drop from ({}, {}) leaves the frame", start_row,
                                  column));
  }
  const int s = spec.frame_size;
  const Eigen::Index plane = static_cast<Eigen::Index>(s) * s;
  Vector frames = Vector::Constant(plane * spec.n_frames, spec.background);
  const auto mask = projections::disc_mask(spec.object_radius);
  const auto rows = ball_rows(spec, start_row, a);
  for (int f = 0; f < spec.n_frames; ++f) {
    for (const auto& o : mask) {
      frames[f * plane + (rows[static_cast<std::size_t>(f)] + o.row) * s + column + o.col] =
          spec.object_intensity;
    }
  }
  return frames;
}

BallDataset gen_ball_dataset(const BallMotionSpec& spec, RngStream& rng) {
  if (spec.n_samples < 2) throw ConfigError("gen_ball_dataset: need at least two samples");
  bool any_fits = false;
  for (int r = 0; r < spec.frame_size && !any_fits; ++r) {
    any_fits = ball_fits(spec, r, spec.frame_size / 2, spec.gravity);
  }
  if (!any_fits) throw ConfigError("gen_ball_dataset: the drop never fits in the frame");

  std::vector<BallSample> all;
  while (static_cast<int>(all.size()) < spec.n_samples) {
    const int row = static_cast<int>(rng.uniform_int(0, spec.frame_size - 1));
    const int col = static_cast<int>(rng.uniform_int(0, spec.frame_size - 1));
    if (!ball_fits(spec, row, col, spec.gravity)) continue;
    all.push_back({render_ball(spec, row, col, spec.gravity), row, col});
  }
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * spec.n_samples));
  BallDataset ds;
  ds.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return ds;
}

projections::ObjectPlacementConstraint ball_constraint(const BallMotionSpec& spec, int start_row,
                                                       int column, double a) {
  projections::ObjectPlacementConstraint::Params p;
  p.height = spec.frame_size;
  p.width = spec.frame_size;
  for (int row : ball_rows(spec, start_row, a)) p.targets.push_back({row, column});
  p.object_mask = projections::disc_mask(spec.object_radius);
  p.background = spec.background;
  p.object_intensity = spec.object_intensity;
  p.detection_threshold = 0.0;
  return projections::ObjectPlacementConstraint(std::move(p));
}

// ---------------------------------------------------------------------------

std::vector<projections::Circle> TopographySpec::all_obstacles() const {
  auto all = training_obstacles;
  all.insert(all.end(), inference_obstacles.begin(), inference_obstacles.end());
  return all;
}

namespace {

std::vector<projections::Circle> read_circles(const nlohmann::json& j, const char* key) {
  std::vector<projections::Circle> out;
  if (!j.contains(key)) return out;
  for (const auto& c : j.at(key)) {
    if (!c.is_array() || c.size() != 3) {
      throw ConfigError(fmt::format("topography: '{}' entries must be [x, y, radius]", key));
    }
    out.push_back({{c[0].get<double>(), c[1].get<double>()}, c[2].get<double>()});
    if (!(out.back().radius > 0.0)) throw ConfigError("topography: radius must be positive");
  }
  return out;
}

}  // namespace

TopographySpec load_topography(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open topography file '{}'", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    TopographySpec spec;
    for (const auto& [key, _] : j.items()) {
      if (key != "map_id" && key != "training_obstacles" && key != "inference_obstacles" &&
          key != "start_x" && key != "goal_x" && key != "domain") {
        throw ConfigError(fmt::format("topography: unknown key '{}'", key));
      }
    }
    spec.map_id = j.value("map_id", 1);
    spec.training_obstacles = read_circles(j, "training_obstacles");
    spec.inference_obstacles = read_circles(j, "inference_obstacles");
    if (j.contains("start_x")) spec.start_x = j["start_x"].get<std::array<double, 2>>();
    if (j.contains("goal_x")) spec.goal_x = j["goal_x"].get<std::array<double, 2>>();
    if (j.contains("domain")) {
      const auto d = j["domain"].get<std::array<double, 2>>();
      spec.domain_lo = d[0];
      spec.domain_hi = d[1];
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("topography file '{}': {}", path.string(), e.what()));
  }
}

Endpoints sample_endpoints(const TopographySpec& spec,
                           const std::vector<projections::Circle>& obstacles, double margin,
                           RngStream& rng) {
  auto clear = [&](const std::array<double, 2>& p) {
    for (const auto& ob : obstacles) {
      // Keep a little slack beyond the clearance so the endpoint is not
      // pinned against an obstacle boundary.
      if (std::hypot(p[0] - ob.center[0], p[1] - ob.center[1]) < ob.radius + 2.0 * margin + 0.05) {
        return false;
      }
    }
    return true;
  };
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Endpoints e;
    e.start = {rng.uniform(spec.start_x[0], spec.start_x[1]),
               rng.uniform(spec.domain_lo, spec.domain_hi)};
    e.goal = {rng.uniform(spec.goal_x[0], spec.goal_x[1]),
              rng.uniform(spec.domain_lo, spec.domain_hi)};
    if (clear(e.start) && clear(e.goal)) return e;
  }
  throw InfeasibleError("sample_endpoints: no obstacle-free start/goal found");
}

Vector straight_path(const Endpoints& e, int n_points) {
  if (n_points < 2) throw ConfigError("straight_path: need at least two points");
  Vector p(2 * n_points);
  for (int k = 0; k < n_points; ++k) {
    const double s = static_cast<double>(k) / (n_points - 1);
    p[2 * k] = (1.0 - s) * e.start[0] + s * e.goal[0];
    p[2 * k + 1] = (1.0 - s) * e.start[1] + s * e.goal[1];
  }
  return p;
}

Vector plan_path(const Endpoints& e, const std::vector<projections::Circle>& obstacles,
                 int n_points, double margin) {
  const projections::TrajectoryConstraint c(obstacles, e.start, e.goal, n_points, margin);
  auto geometry = [&] {
    std::string s = fmt::format("start ({:.4f}, {:.4f}) goal ({:.4f}, {:.4f}) obstacles:",
                                e.start[0], e.start[1], e.goal[0], e.goal[1]);
    for (const auto& ob : obstacles) {
      s += fmt::format(" [({:.4f}, {:.4f}) r={:.4f}]", ob.center[0], ob.center[1], ob.radius);
    }
    return s;
  };
  auto first = c.try_project(straight_path(e, n_points));
  if (!first.converged) {
    throw InfeasibleError("plan_path: projection of the straight line failed; " + geometry());
  }
  // Descend the discrete path energy sum |p_{k+1} - p_k|^2 (shorter and evenly
  // spaced), projecting after every step and keeping the last feasible path.
  Vector path = std::move(first.point);
  constexpr double kStep = 0.2;
  for (int it = 0; it < 60; ++it) {
    Vector grad = Vector::Zero(path.size());
    for (int k = 1; k + 1 < n_points; ++k) {
      grad.segment<2>(2 * k) =
          2.0 * (2.0 * path.segment<2>(2 * k) - path.segment<2>(2 * k - 2) -
                 path.segment<2>(2 * k + 2));
    }
    auto next = c.try_project(path - kStep * grad);
    if (!next.converged) break;
    const double moved = (next.point - path).norm();
    path = std::move(next.point);
    if (moved < 1e-6) break;
  }
  return path;
}

TrajectoryDataset gen_trajectory_dataset(const TopographySpec& spec, int n, int n_points,
                                         double margin, RngStream& rng) {
  if (n < 1) throw ConfigError("gen_trajectory_dataset: n must be >= 1");
  TrajectoryDataset ds;
  std::string last_error;
  int failures = 0;
  while (static_cast<int>(ds.paths.size()) < n) {
    const Endpoints e = sample_endpoints(spec, spec.training_obstacles, margin, rng);
    try {
      ds.paths.push_back(plan_path(e, spec.training_obstacles, n_points, margin));
      ds.endpoints.push_back(e);
    } catch (const InfeasibleError& err) {
      last_error = err.what();
      if (++failures > 10 * n + 100) {
        throw InfeasibleError("gen_trajectory_dataset: too many failed plans; last: " +
                              last_error);
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------

namespace {

// Periodic separable Gaussian blur of an s x s image.
Vector blur(const Vector& img, int s, double sd) {
  const int radius = static_cast<int>(std::ceil(3.0 * sd));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sd * sd));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;
  auto wrap = [s](int i) { return ((i % s) + s) % s; };
  Vector tmp = Vector::Zero(img.size());
  Vector out = Vector::Zero(img.size());
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      for (int k = -radius; k <= radius; ++k) {
        tmp[r * s + c] += kernel[static_cast<std::size_t>(k + radius)] * img[r * s + wrap(c + k)];
      }
    }
  }
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      for (int k = -radius; k <= radius; ++k) {
        out[r * s + c] += kernel[static_cast<std::size_t>(k + radius)] * tmp[wrap(r + k) * s + c];
      }
    }
  }
  return out;
}

}  // namespace

Vector texture_from_noise(const TextureSpec& spec, const Vector& white_noise, double offset) {
  const int s = spec.size;
  if (white_noise.size() != static_cast<Eigen::Index>(s) * s) {
    throw DimensionError("texture_from_noise: noise must have size^2 entries");
  }
  Vector f = blur(white_noise, s, spec.correlation_length);
  const double mean = f.mean();
  const double sd = std::sqrt((f.array() - mean).square().mean());
  if (!(sd > 0.0)) throw NumericError("texture_from_noise: degenerate field");
  f = (f.array() - mean) / sd;
  return (spec.gain * (f.array() + offset)).tanh().matrix();
}

TextureDataset gen_texture_dataset(const TextureSpec& spec, int n, RngStream& rng) {
  if (n < 1) throw ConfigError("gen_texture_dataset: n must be >= 1");
  if (spec.size < 2 || !(spec.correlation_length > 0.0) || !(spec.gain > 0.0)) {
    throw ConfigError("gen_texture_dataset: invalid texture spec");
  }
  TextureDataset ds;
  for (int k = 0; k < n; ++k) {
    const Vector noise = gaussian_noise(rng, static_cast<Eigen::Index>(spec.size) * spec.size);
    const double offset = rng.uniform(spec.offset_min, spec.offset_max);
    Vector img = texture_from_noise(spec, noise, offset);
    ds.porosity.push_back(static_cast<long long>((img.array() < 0.0).count()));
    ds.offsets.push_back(offset);
    ds.images.push_back(std::move(img));
  }
  return ds;
}

}  // namespace pgdm::harness
