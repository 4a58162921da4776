#include "pgdm/sampler.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <optional>
#include <ostream>

namespace pgdm::sampling {

namespace {
constexpr double kDivergenceBound = 1e6;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::pgdm_alg1: return "pgdm_alg1";
    case Variant::unconstrained: return "unconstrained";
    case Variant::post_proc: return "post_proc";
    case Variant::sde_corrector: return "sde_corrector";
  }
  return "unknown";
}

Variant parse_variant(const std::string& s) {
  if (s == "pgdm_alg1" || s == "pgdm") return Variant::pgdm_alg1;
  if (s == "unconstrained") return Variant::unconstrained;
  if (s == "post_proc") return Variant::post_proc;
  if (s == "sde_corrector") return Variant::sde_corrector;
  throw ConfigError(fmt::format("unknown sampler variant '{}'", s));
}

void SamplerConfig::validate() const {
  if (M < 1) throw ConfigError(fmt::format("sampler: M must be >= 1, got {}", M));
  const int start = effective_start();
  if (start < 0 || start > schedule.levels()) {
    throw ConfigError(fmt::format("sampler: projection_start_t must lie in [0, {}], got {}",
                                  schedule.levels(), start));
  }
  if (variant == Variant::sde_corrector && !(snr_r > 0.0)) {
    throw ConfigError("sampler: snr_r must be positive for the corrector");
  }
}

Vector langevin_update(const Vector& x, const Vector& grad, double gamma, const Vector& noise) {
  if (!(gamma > 0.0)) throw ConfigError("langevin update: gamma must be positive");
  if (grad.size() != x.size() || noise.size() != x.size()) {
    throw DimensionError("langevin update: dimension mismatch");
  }
  return x + gamma * grad + std::sqrt(2.0 * gamma) * noise;
}

Vector update_step_U(const Vector& x, const score::ScoreField& score, double sigma, double gamma,
                     RngStream& rng) {
  const Vector noise = gaussian_noise(rng, x.size());
  const Vector grad = score.evaluate(x, sigma);
  require_finite(grad, fmt::format("score output at sigma={}", sigma));
  return langevin_update(x, grad, gamma, noise);
}

Vector projected_step(const Vector& x, const score::ScoreField& score, double sigma, double gamma,
                      const projections::ConstraintSet& constraint, RngStream& rng) {
  return constraint.project(update_step_U(x, score, sigma, gamma, rng));
}

double corrector_step_size(double snr_r, const Vector& noise, const Vector& grad) {
  const double ratio = snr_r * noise.norm() / grad.norm();
  return 2.0 * ratio * ratio;
}

namespace {

struct ChainOutput {
  Vector sample;
  ChainTrace trace;
};

ChainOutput run_chain(const SamplerConfig& cfg, const score::ScoreField& score,
                      const projections::ConstraintSet& constraint, std::uint64_t chain) {
  RngStream rng(cfg.seed, cfg.stream_offset + chain);
  const Eigen::Index d = score.dim();
  const int T = cfg.schedule.levels();
  const int start = cfg.effective_start();
  const bool iterative = cfg.variant == Variant::pgdm_alg1 || cfg.variant == Variant::sde_corrector;

  ChainOutput out;
  Vector x = cfg.schedule.sigma_max() * gaussian_noise(rng, d);
  double last_corrector_gamma = 0.0;
  std::optional<Vector> last_feasible;

  for (int t = T; t >= 1; --t) {
    const double sigma = cfg.schedule.sigma(t);
    const bool project_now = iterative && t <= start;
    for (int i = 1; i <= cfg.M; ++i) {
      const Vector noise = gaussian_noise(rng, d);
      const Vector grad = score.evaluate(x, sigma);
      if (!grad.allFinite()) {
        throw NumericError(fmt::format("score output non-finite at t={}, i={}", t, i));
      }
      double gamma = cfg.schedule.gamma(t);
      if (cfg.variant == Variant::sde_corrector) {
        const double gnorm = grad.norm();
        if (gnorm > 0.0) {
          gamma = corrector_step_size(cfg.snr_r, noise, grad);
          last_corrector_gamma = gamma;
        } else if (last_corrector_gamma > 0.0) {
          gamma = last_corrector_gamma;
        }
        // else: zero gradient before any valid step, keep the schedule value.
      }
      Vector updated = langevin_update(x, grad, gamma, noise);

      TraceRecord rec{t, i, 0.0, 0.0, grad.norm(), gamma};
      if (project_now) {
        auto projected = constraint.try_project(updated);
        // A local solver that stalls from the updated point is restarted
        // from the most recent feasible iterate.
        if (!projected.converged && last_feasible) {
          projected = constraint.try_project_from(updated, *last_feasible);
        }
        if (projected.converged) last_feasible = projected.point;
        rec.pre_error = (projected.point - updated).squaredNorm();
        x = std::move(projected.point);
        if (cfg.record_trace) rec.post_error = projected.converged ? 0.0 : constraint.distance_sq(x);
      } else {
        x = std::move(updated);
        if (cfg.record_trace) {
          rec.pre_error = constraint.distance_sq(x);
          rec.post_error = rec.pre_error;
        }
      }
      if (cfg.record_trace) out.trace.push_back(rec);

      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceBound) {
        throw DivergenceError(
            fmt::format("chain {} diverged at t={}, i={} (|x| > {:g})", chain, t, i,
                        kDivergenceBound),
            std::move(out.trace));
      }
    }
  }
  if (cfg.variant == Variant::post_proc) x = constraint.try_project(x).point;
  out.sample = std::move(x);
  return out;
}

}  // namespace

SampleResult sample(const SamplerConfig& config, const score::ScoreField& score,
                    const projections::ConstraintSet& constraint, int n_samples) {
  config.validate();
  if (n_samples < 1) throw ConfigError("sample: n_samples must be >= 1");
  SampleResult result;
  result.samples.reserve(static_cast<std::size_t>(n_samples));
  for (int c = 0; c < n_samples; ++c) {
    auto chain = run_chain(config, score, constraint, static_cast<std::uint64_t>(c));
    result.samples.push_back(std::move(chain.sample));
    if (config.record_trace) result.traces.push_back(std::move(chain.trace));
  }
  return result;
}

SampleResult sample_sde_corrector(const SamplerConfig& config, const score::ScoreField& score,
                                  const projections::ConstraintSet& constraint, int n_samples) {
  SamplerConfig cfg = config;
  cfg.variant = Variant::sde_corrector;
  return sample(cfg, score, constraint, n_samples);
}

void write_trace_csv(const std::vector<ChainTrace>& traces, std::ostream& out) {
  out << "chain,t,i,pre_error,post_error,grad_norm,gamma\n";
  for (std::size_t c = 0; c < traces.size(); ++c) {
    for (const auto& r : traces[c]) {
      fmt::print(out, "{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", c, r.t, r.i, r.pre_error,
                 r.post_error, r.grad_norm, r.gamma);
    }
  }
}

}  // namespace pgdm::sampling
