#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "pgdm/projections.hpp"

namespace pgdm::projections {

namespace {

// floor(sum / n + 1/2) in exact integer arithmetic (sum >= 0, n > 0).
int rounded_mean(long long sum, long long n) {
  const long long num = 2 * sum + n;
  const long long den = 2 * n;
  long long q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return static_cast<int>(q);
}

}  // namespace

std::vector<Pixel> disc_mask(double radius) {
  if (!(radius >= 0.0)) throw ConfigError("disc_mask: radius must be non-negative");
  std::vector<Pixel> mask;
  const int r = static_cast<int>(std::floor(radius));
  for (int dr = -r; dr <= r; ++dr) {
    for (int dc = -r; dc <= r; ++dc) {
      if (dr * dr + dc * dc <= radius * radius + 1e-9) mask.push_back({dr, dc});
    }
  }
  return mask;
}

ObjectPlacementConstraint::ObjectPlacementConstraint(Params params) : p_(std::move(params)) {
  if (p_.height < 1 || p_.width < 1) throw ConfigError("object placement: empty frame size");
  if (p_.targets.empty()) throw ConfigError("object placement: at least one frame required");
  if (p_.object_mask.empty()) throw ConfigError("object placement: empty object mask");
  if (!(p_.object_intensity < p_.detection_threshold) ||
      !(p_.background >= p_.detection_threshold)) {
    throw ConfigError("object placement: object must be darker than threshold, background not");
  }
  long long sum_r = 0;
  long long sum_c = 0;
  for (const Pixel& o : p_.object_mask) {
    sum_r += o.row;
    sum_c += o.col;
  }
  if (sum_r != 0 || sum_c != 0) {
    throw ConfigError("object placement: object mask offsets must be centred on (0, 0)");
  }
  for (std::size_t f = 0; f < p_.targets.size(); ++f) {
    const Pixel t = p_.targets[f];
    if (t.row < 0 || t.row >= p_.height || t.col < 0 || t.col >= p_.width) {
      throw ConfigError(fmt::format("object placement: target ({}, {}) of frame {} out of bounds",
                                    t.row, t.col, f));
    }
    for (const Pixel& o : p_.object_mask) {
      const int r = t.row + o.row;
      const int c = t.col + o.col;
      if (r < 0 || r >= p_.height || c < 0 || c >= p_.width) {
        throw ConfigError(fmt::format(
            "object placement: object mask at target ({}, {}) of frame {} leaves the frame", t.row,
            t.col, f));
      }
    }
  }
}

std::optional<Pixel> ObjectPlacementConstraint::object_center(const Vector& frames, int f) const {
  const auto plane = static_cast<Eigen::Index>(p_.height) * p_.width;
  long long sum_r = 0;
  long long sum_c = 0;
  long long n = 0;
  for (int r = 0; r < p_.height; ++r) {
    for (int c = 0; c < p_.width; ++c) {
      if (frames[f * plane + r * p_.width + c] < p_.detection_threshold) {
        sum_r += r;
        sum_c += c;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return Pixel{rounded_mean(sum_r, n), rounded_mean(sum_c, n)};
}

double ObjectPlacementConstraint::max_position_error(const Vector& frames) const {
  double worst = 0.0;
  for (int f = 0; f < this->frames(); ++f) {
    const auto center = object_center(frames, f);
    if (!center) return std::numeric_limits<double>::infinity();
    const double dr = center->row - p_.targets[static_cast<std::size_t>(f)].row;
    const double dc = center->col - p_.targets[static_cast<std::size_t>(f)].col;
    worst = std::max(worst, std::hypot(dr, dc));
  }
  return worst;
}

bool ObjectPlacementConstraint::is_feasible(const Vector& frames, double tol) const {
  const auto plane = static_cast<Eigen::Index>(p_.height) * p_.width;
  if (frames.size() != plane * this->frames()) {
    throw DimensionError(fmt::format("object placement: expected {} values, got {}",
                                     plane * this->frames(), frames.size()));
  }
  return max_position_error(frames) <= tol;
}

Vector ObjectPlacementConstraint::project_impl(const Vector& frames) const {
  const auto plane = static_cast<Eigen::Index>(p_.height) * p_.width;
  if (frames.size() != plane * this->frames()) {
    throw DimensionError(fmt::format("object placement: expected {} values, got {}",
                                     plane * this->frames(), frames.size()));
  }
  Vector out = frames;
  for (int f = 0; f < this->frames(); ++f) {
    const Pixel target = p_.targets[static_cast<std::size_t>(f)];
    const auto center = object_center(frames, f);
    if (center && *center == target) continue;

    auto at = [&](int r, int c) -> double& { return out[f * plane + r * p_.width + c]; };

    // Record the object (offsets from its rounded centroid) and erase it.
    std::vector<std::pair<Pixel, double>> object;
    bool fits = center.has_value();
    for (int r = 0; r < p_.height; ++r) {
      for (int c = 0; c < p_.width; ++c) {
        double& v = at(r, c);
        if (v < p_.detection_threshold) {
          const Pixel offset{r - center->row, c - center->col};
          const int tr = target.row + offset.row;
          const int tc = target.col + offset.col;
          if (tr < 0 || tr >= p_.height || tc < 0 || tc >= p_.width) fits = false;
          object.emplace_back(offset, v);
          v = p_.background;
        }
      }
    }
    if (fits) {
      for (const auto& [offset, value] : object) at(target.row + offset.row, target.col + offset.col) = value;
    } else {
      // Nothing detected, or the detected shape would be clipped at the
      // target: stamp the nominal object instead.
      for (const Pixel& o : p_.object_mask) at(target.row + o.row, target.col + o.col) = p_.object_intensity;
    }
  }
  return out;
}

Vector project_object_position(const ObjectPlacementConstraint& c, const Vector& frames) {
  return c.project(frames);
}

}  // namespace pgdm::projections
