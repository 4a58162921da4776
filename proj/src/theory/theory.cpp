#include "pgdm/theory.hpp"

#include <fmt/format.h>

#include <cmath>

#include "pgdm/sampler.hpp"

namespace pgdm::theory {

namespace {

double step_contraction(const TheoremProbe& probe) {
  if (probe.gmm.components() != 1) {
    throw ConfigError("theory: the probe mixture must have a single component");
  }
  const auto& var = probe.gmm.variances();
  const double v = var(0, 0);
  if ((var.array() != v).any()) throw ConfigError("theory: the probe Gaussian must be isotropic");
  return 1.0 - probe.gamma / (v + probe.sigma * probe.sigma);
}

double distance_to_set(const projections::ConstraintSet& c, const Vector& p) {
  if (const auto* h = dynamic_cast<const projections::Halfspace*>(&c)) {
    return std::max(0.0, h->normal().dot(p) - h->offset()) / h->normal().norm();
  }
  if (const auto* b = dynamic_cast<const projections::Ball*>(&c)) {
    return std::max(0.0, (p - b->center()).norm() - b->radius());
  }
  throw ConfigError(fmt::format("theory: unsupported constraint family '{}'", c.name()));
}

double mean_and_ci(double sum, double sum_sq, long long n, double* ci) {
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - sum * mean) / static_cast<double>(n - 1));
  *ci = 1.96 * std::sqrt(var / static_cast<double>(n));
  return mean;
}

}  // namespace

TheoremProbe make_halfline_probe(double c, double gamma) {
  Vector mean = Vector::Zero(1);
  Vector a(1);
  a << -1.0;
  return TheoremProbe{score::GaussianMixture::isotropic(mean, 1.0),
                      std::make_shared<projections::Halfspace>(a, -c), gamma, 0.0};
}

double compute_rho(const TheoremProbe& probe) {
  if (!probe.constraint) throw ConfigError("theory: probe has no constraint");
  // The gradient step is the affine contraction y = mu + k (x - mu), so the
  // closest reachable point to mu is |k| dist(mu, C).
  const double k = step_contraction(probe);
  return std::abs(k) * distance_to_set(*probe.constraint, probe.gmm.optimum_mean());
}

Vector gradient_step(const TheoremProbe& probe, const Vector& x) {
  return x + probe.gamma * score::gmm_score(probe.gmm, x, probe.sigma);
}

bool satisfies_gradient_criterion(const TheoremProbe& probe, const Vector& x, double rho) {
  const double d = (gradient_step(probe, x) - probe.gmm.optimum_mean()).norm();
  return d <= rho * (1.0 + 1e-12);
}

XDistribution uniform_interval(double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("uniform_interval: lo > hi");
  return [lo, hi](RngStream& rng) {
    Vector x(1);
    x[0] = rng.uniform(lo, hi);
    return x;
  };
}

XDistribution criterion_region(const TheoremProbe& probe) {
  if (!probe.constraint) throw ConfigError("theory: probe has no constraint");
  const Vector mu = probe.gmm.optimum_mean();
  const double radius = distance_to_set(*probe.constraint, mu);
  if (!(radius > 0.0)) throw ConfigError("theory: the optimum is feasible, the region is empty");
  return [mu, radius](RngStream& rng) {
    const Eigen::Index d = mu.size();
    Vector dir = gaussian_noise(rng, d);
    while (dir.norm() == 0.0) dir = gaussian_noise(rng, d);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    return Vector(mu + r * dir.normalized());
  };
}

Theorem1Report verify_theorem1(const TheoremProbe& probe, long long n_trials,
                               const XDistribution& x_distribution, std::uint64_t seed) {
  if (!probe.constraint) throw ConfigError("theory: probe has no constraint");
  if (n_trials < 10000) throw ConfigError("verify_theorem1: n_trials must be >= 10^4");
  if (!(probe.gamma > 0.0)) throw ConfigError("verify_theorem1: gamma must be positive");
  const auto& C = *probe.constraint;
  const double rho = compute_rho(probe);
  RngStream x_rng(seed, 0);
  RngStream eps_rng(seed, 1);
  const double noise_scale = std::sqrt(2.0 * probe.gamma);

  double sl = 0, sl2 = 0, sr = 0, sr2 = 0, sd = 0, sd2 = 0;
  long long in_region = 0;
  for (long long k = 0; k < n_trials; ++k) {
    const Vector x = x_distribution(x_rng);
    const Vector eps = gaussian_noise(eps_rng, x.size());
    if (satisfies_gradient_criterion(probe, x, rho)) ++in_region;
    const Vector px = C.project(x);
    const double lhs = C.distance_sq(gradient_step(probe, x) + noise_scale * eps);
    const double rhs = C.distance_sq(gradient_step(probe, px) + noise_scale * eps);
    sl += lhs;
    sl2 += lhs * lhs;
    sr += rhs;
    sr2 += rhs * rhs;
    sd += lhs - rhs;
    sd2 += (lhs - rhs) * (lhs - rhs);
  }
  Theorem1Report r;
  r.n_trials = n_trials;
  r.lhs_mean = mean_and_ci(sl, sl2, n_trials, &r.lhs_ci);
  r.rhs_mean = mean_and_ci(sr, sr2, n_trials, &r.rhs_ci);
  r.diff_mean = mean_and_ci(sd, sd2, n_trials, &r.diff_ci);
  r.criterion_fraction = static_cast<double>(in_region) / static_cast<double>(n_trials);
  r.holds = r.lhs_mean + r.lhs_ci >= r.rhs_mean - r.rhs_ci;
  return r;
}

Corollary1Report verify_corollary1(const TheoremProbe& probe, const NoiseSchedule& schedule, int M,
                                   double xi, int n_chains, std::uint64_t seed) {
  if (!probe.constraint) throw ConfigError("theory: probe has no constraint");
  if (!(xi > 0.0)) throw ConfigError("verify_corollary1: xi must be positive");
  if (n_chains < 1) throw ConfigError("verify_corollary1: n_chains must be >= 1");

  sampling::SamplerConfig cfg{schedule};
  cfg.M = M;
  cfg.variant = sampling::Variant::pgdm_alg1;
  cfg.seed = seed;
  cfg.record_trace = true;
  const score::GmmScore score(probe.gmm);
  const auto result = sampling::sample(cfg, score, *probe.constraint, n_chains);

  const std::size_t steps = result.traces.front().size();
  Corollary1Report rep;
  rep.error_trace.assign(steps, 0.0);
  for (const auto& trace : result.traces) {
    for (std::size_t k = 0; k < steps; ++k) rep.error_trace[k] += trace[k].pre_error;
  }
  for (double& e : rep.error_trace) e /= static_cast<double>(n_chains);

  const int T = schedule.levels();
  rep.level_means.assign(static_cast<std::size_t>(T), 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const int t = result.traces.front()[k].t;
    rep.level_means[static_cast<std::size_t>(t - 1)] += rep.error_trace[k] / M;
  }

  // Scan backwards for the start of the final run of steps at or below xi.
  std::size_t first = steps;
  while (first > 0 && rep.error_trace[first - 1] <= xi) --first;
  rep.final_error = rep.error_trace.back();
  rep.reached = first < steps;
  if (rep.reached) {
    rep.first_t = result.traces.front()[first].t;
    rep.first_i = result.traces.front()[first].i;
  }
  return rep;
}

}  // namespace pgdm::theory
