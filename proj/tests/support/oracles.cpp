#include "oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgdm/projections.hpp"
#include "pgdm/score.hpp"

namespace oracle {

using pgdm::Vector;
namespace proj = pgdm::projections;

Vector grid_projection_2d(const Vector& x, const std::function<bool(double, double)>& feasible,
                          double lo, double hi, double step) {
  double best = std::numeric_limits<double>::infinity();
  Vector arg(2);
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i <= n; ++i) {
    const double a = lo + step * static_cast<double>(i);
    for (long j = 0; j <= n; ++j) {
      const double b = lo + step * static_cast<double>(j);
      if (!feasible(a, b)) continue;
      const double d = (a - x[0]) * (a - x[0]) + (b - x[1]) * (b - x[1]);
      if (d < best) {
        best = d;
        arg << a, b;
      }
    }
  }
  return arg;
}

Vector porosity_bruteforce(const Vector& x, int k, double tau, double delta) {
  const auto n = static_cast<int>(x.size());
  double best = std::numeric_limits<double>::infinity();
  Vector arg = x;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    Vector y = x;
    for (int i = 0; i < n; ++i) {
      const bool below = (mask >> i) & 1u;
      if (below && x[i] >= tau) y[i] = tau - delta;
      if (!below && x[i] < tau) y[i] = tau + delta;
    }
    const double cost = (y - x).squaredNorm();
    if (cost < best) {
      best = cost;
      arg = y;
    }
  }
  return arg;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

namespace {

double seg_dist(double ax, double ay, double bx, double by) {
  // Distance from the origin to segment [a, b].
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? -(ax * dx + ay * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(ax + t * dx, ay + t * dy);
}

}  // namespace

std::array<double, 2> midpoint_grid_search(double span, double clearance, double step) {
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 2> arg{0.0, 0.0};
  // Upper half-plane only: the solver breaks the mirror tie towards +y.
  const auto nx = static_cast<long>(std::llround(1.0 / step));
  const auto ny = static_cast<long>(std::llround(2.0 * clearance / step));
  for (long i = -nx / 2; i <= nx / 2; ++i) {
    const double mx = step * static_cast<double>(i);
    for (long j = 0; j <= ny; ++j) {
      const double my = step * static_cast<double>(j);
      if (seg_dist(-span, 0.0, mx, my) < clearance || seg_dist(mx, my, span, 0.0) < clearance) continue;
      const double d = mx * mx + my * my;
      if (d < best) {
        best = d;
        arg = {mx, my};
      }
    }
  }
  return arg;
}

Check check_dykstra_grid() {
  auto box = std::make_shared<proj::Box>(proj::Box::uniform(2, 0.0, 1.0));
  auto half = std::make_shared<proj::Halfspace>(Vector::Ones(2), 1.0);
  const proj::Intersection C({box, half});
  auto feasible = [](double a, double b) { return a >= 0 && a <= 1 && b >= 0 && b <= 1 && a + b <= 1 + 1e-12; };
  const double step = 1e-3;
  Check out{true, ""};
  for (const auto& x : {Vector{{2.0, 2.0}}, Vector{{1.5, -0.5}}, Vector{{-0.7, 0.4}}, Vector{{0.9, 1.6}}}) {
    const Vector lib = C.project(x);
    const Vector ref = grid_projection_2d(x, feasible, -0.5, 1.5, step);
    const double err = (lib - ref).norm();
    out.ok = out.ok && err <= 2.0 * step;
    out.detail += fmt::format("x=({:g},{:g}) dykstra=({:.5f},{:.5f}) grid=({:.5f},{:.5f}); ", x[0], x[1],
                              lib[0], lib[1], ref[0], ref[1]);
  }
  return out;
}

Check check_porosity_bruteforce() {
  Check out{true, ""};
  const double delta = 1e-3;
  auto compare = [&](const Vector& x, int k) {
    const proj::PorosityConstraint C(k, 0.0, delta);
    const Vector lib = C.project(x);
    const Vector ref = porosity_bruteforce(x, k, 0.0, delta);
    const double err = (lib - ref).cwiseAbs().maxCoeff();
    out.ok = out.ok && err <= 1e-15;
    return err;
  };
  const Vector x{{-0.5, -0.1, 0.2, 0.6}};
  double worst = 0.0;
  for (int k = 0; k <= 4; ++k) worst = std::max(worst, compare(x, k));
  pgdm::RngStream rng(7, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector y(8);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.uniform(-1.0, 1.0);
    worst = std::max(worst, compare(y, static_cast<int>(rng.uniform_int(0, 8))));
  }
  out.detail = fmt::format("max |top-k - subset brute force| = {:.3g} over 55 cases", worst);
  return out;
}

Check check_trajectory_midpoint() {
  const double margin = 0.02;
  const proj::TrajectoryConstraint C({proj::Circle{{0.0, 0.0}, 1.0}}, {-2.0, 0.0}, {2.0, 0.0}, 3, margin);
  const Vector path{{-2.0, 0.0, 0.0, 0.0, 2.0, 0.0}};
  const Vector lib = C.project(path);
  const double step = 1e-3;
  const auto ref = midpoint_grid_search(2.0, 1.0 + margin, step);
  const double err = std::hypot(lib[2] - ref[0], lib[3] - ref[1]);
  return {err <= 2.0 * step && C.is_feasible(lib, 1e-6),
          fmt::format("solver midpoint ({:.5f},{:.5f}) grid ({:.4f},{:.4f}) err {:.2e}", lib[2], lib[3],
                      ref[0], ref[1], err)};
}

Check check_gmm_score_fd() {
  namespace score = pgdm::score;
  pgdm::RngStream rng(11, 0);
  std::vector<Vector> means, vars;
  for (int k = 0; k < 3; ++k) {
    means.push_back(pgdm::gaussian_noise(rng, 3));
    Vector v(3);
    for (int i = 0; i < 3; ++i) v[i] = rng.uniform(0.2, 2.0);
    vars.push_back(v);
  }
  const score::GaussianMixture gmm({0.2, 0.5, 0.3}, means, vars);
  const auto iso = score::GaussianMixture::from_points(means, 0.3);
  double worst = 0.0;
  for (const auto* g : {&gmm, &iso}) {
    for (double sigma : {0.0, 0.1, 1.0}) {
      for (int trial = 0; trial < 10; ++trial) {
        const Vector x = 1.5 * pgdm::gaussian_noise(rng, 3);
        const Vector s = score::gmm_score(*g, x, sigma);
        const Vector fd = fd_gradient(
            [&](const Vector& y) { return score::gmm_log_density(*g, y, sigma); }, x, 1e-5);
        worst = std::max(worst, (s - fd).norm() / std::max(s.norm(), 1e-12));
      }
    }
  }
  return {worst <= 1e-6, fmt::format("max relative |score - central FD| = {:.3g}", worst)};
}

Check check_mlp_backprop_fd() {
  namespace score = pgdm::score;
  double worst = 0.0;
  for (auto act : {score::Activation::tanh, score::Activation::softplus}) {
    score::MlpScoreNet net(3, {5, 4}, act, score::SigmaConditioning::input_and_scale);
    pgdm::RngStream rng(13, 0);
    net.init_random(rng);
    Vector theta = net.parameters();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
    net.set_parameters(theta);
    const Vector x = pgdm::gaussian_noise(rng, 3);
    const Vector up = pgdm::gaussian_noise(rng, 3);
    const double sigma = 0.7;
    const Vector analytic = score::MlpScoreNet::flatten(net.backward(x, sigma, up));
    auto objective = [&](const Vector& p) {
      score::MlpScoreNet probe = net;
      probe.set_parameters(p);
      return up.dot(probe.forward(x, sigma));
    };
    const Vector fd = fd_gradient(objective, theta, 1e-5);
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      const double scale = std::max(std::abs(fd[i]), 1e-3);
      worst = std::max(worst, std::abs(analytic[i] - fd[i]) / scale);
    }
  }
  return {worst <= 1e-5, fmt::format("max relative |backprop - central FD| = {:.3g}", worst)};
}

}  // namespace oracle
