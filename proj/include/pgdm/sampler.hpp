#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgdm/core.hpp"
#include "pgdm/projections.hpp"
#include "pgdm/score.hpp"

namespace pgdm::sampling {

enum class Variant {
  pgdm_alg1,      // projection after every Langevin update
  unconstrained,  // plain annealed Langevin dynamics
  post_proc,      // unconstrained chain, one projection of the final sample
  sde_corrector,  // SNR-adaptive step size, projection after every update
};

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct SamplerConfig {
  NoiseSchedule schedule;
  int M = 100;
  /// Projections are applied at every level t <= projection_start_t.
  /// T projects throughout; 0 never projects.
  int projection_start_t = -1;  // -1: use T
  Variant variant = Variant::pgdm_alg1;
  double snr_r = 0.16;
  std::uint64_t seed = 0;
  /// Chain c draws from stream (seed, stream_offset + c).
  std::uint64_t stream_offset = 0;
  bool record_trace = false;

  int effective_start() const { return projection_start_t < 0 ? schedule.levels() : projection_start_t; }
  void validate() const;
};

struct TraceRecord {
  int t = 0;
  int i = 0;
  double pre_error = 0.0;   // projection cost of the updated point
  double post_error = 0.0;  // projection cost after projecting (0 when exact)
  double grad_norm = 0.0;
  double gamma = 0.0;
};

using ChainTrace = std::vector<TraceRecord>;

struct SampleResult {
  std::vector<Vector> samples;
  std::vector<ChainTrace> traces;  // empty unless record_trace
};

/// Langevin update x + gamma g + sqrt(2 gamma) noise.
Vector langevin_update(const Vector& x, const Vector& grad, double gamma, const Vector& noise);

/// One unprojected update with a fresh standard normal draw from `rng`.
Vector update_step_U(const Vector& x, const score::ScoreField& score, double sigma, double gamma,
                     RngStream& rng);

/// project(update_step_U(x, ...)); throws if the projection fails.
Vector projected_step(const Vector& x, const score::ScoreField& score, double sigma, double gamma,
                      const projections::ConstraintSet& constraint, RngStream& rng);

/// SNR-adaptive step size 2 (r ||noise|| / ||grad||)^2.
double corrector_step_size(double snr_r, const Vector& noise, const Vector& grad);

/// Runs `n_samples` independent chains (chain c uses stream (seed, stream_offset + c)) with the
/// configured variant. Returns the final iterate of every chain. When a projection does not
/// converge, it is retried from the chain's most recent feasible iterate
/// (ConstraintSet::try_project_from); if that fails too, the unconverged point is kept.
SampleResult sample(const SamplerConfig& config, const score::ScoreField& score,
                    const projections::ConstraintSet& constraint, int n_samples);

/// Same loop with the corrector step size of the SDE formulation; equivalent
/// to sample() with variant sde_corrector.
SampleResult sample_sde_corrector(const SamplerConfig& config, const score::ScoreField& score,
                                  const projections::ConstraintSet& constraint, int n_samples);

/// CSV with columns chain,t,i,pre_error,post_error,grad_norm,gamma.
void write_trace_csv(const std::vector<ChainTrace>& traces, std::ostream& out);

/// Raised when a chain leaves the |x| <= 1e6 region.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, ChainTrace trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const ChainTrace& trace() const noexcept { return trace_; }

 private:
  ChainTrace trace_;
};

}  // namespace pgdm::sampling
