#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pgdm/core.hpp"
#include "pgdm/projections.hpp"
#include "pgdm/score.hpp"

namespace pgdm::theory {

/// Convex setting of the convergence analysis: one Gaussian whose mean is the
/// global optimum, a halfspace or ball constraint and a fixed step size.
struct TheoremProbe {
  score::GaussianMixture gmm;
  std::shared_ptr<const projections::ConstraintSet> constraint;
  double gamma = 0.1;
  /// Noise level at which the score is evaluated (0: the data score).
  double sigma = 0.0;
};

/// Probe for C = {x >= c} in 1-D with a standard normal target.
TheoremProbe make_halfline_probe(double c, double gamma);

/// Distance from the optimum to the closest point reachable by one noiseless
/// gradient step taken from C. Supports Halfspace and Ball constraints with a
/// single-component mixture; anything else throws ConfigError.
double compute_rho(const TheoremProbe& probe);

/// One noiseless gradient step x + gamma s(x).
Vector gradient_step(const TheoremProbe& probe, const Vector& x);

/// True when the gradient step from x lands at least as close to the optimum
/// as rho (the inner-iteration criterion of the analysis).
bool satisfies_gradient_criterion(const TheoremProbe& probe, const Vector& x, double rho);

using XDistribution = std::function<Vector(RngStream&)>;

/// Uniform draws on [lo, hi] (1-D).
XDistribution uniform_interval(double lo, double hi);
/// Uniform draws in the region where the gradient criterion holds. For a
/// Gaussian score this is the ball around the optimum of radius dist(mu, C).
XDistribution criterion_region(const TheoremProbe& probe);

struct Theorem1Report {
  long long n_trials = 0;
  double lhs_mean = 0.0;  // E[Error(U(x))]
  double rhs_mean = 0.0;  // E[Error(U(P(x)))]
  double lhs_ci = 0.0;    // 95% half-widths
  double rhs_ci = 0.0;
  double diff_mean = 0.0;  // paired lhs - rhs
  double diff_ci = 0.0;
  double criterion_fraction = 0.0;  // share of x satisfying the gradient criterion
  bool holds = false;               // lhs_mean + lhs_ci >= rhs_mean - rhs_ci
};

/// Monte-Carlo estimate of both expectations with common noise per trial.
/// Requires n_trials >= 10^4.
Theorem1Report verify_theorem1(const TheoremProbe& probe, long long n_trials,
                               const XDistribution& x_distribution, std::uint64_t seed);

struct Corollary1Report {
  bool reached = false;
  /// First (t, i) after which the chain-averaged Error stays <= xi.
  int first_t = 0;
  int first_i = 0;
  double final_error = 0.0;
  /// Chain-averaged pre-projection Error per step, in sampling order.
  std::vector<double> error_trace;
  /// Mean Error per noise level, indexed by t - 1.
  std::vector<double> level_means;
};

/// Runs `n_chains` projected chains with the probe's mixture as score and its
/// constraint, and locates the step from which the averaged projection cost
/// stays below xi.
Corollary1Report verify_corollary1(const TheoremProbe& probe, const NoiseSchedule& schedule, int M,
                                   double xi, int n_chains, std::uint64_t seed);

}  // namespace pgdm::theory
