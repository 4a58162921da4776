#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgdm/sampler.hpp"

namespace pgdm::harness {

enum class Experiment { gmm_theory, physics_motion, trajectories, materials };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);

/// Resolved experiment configuration. Every key of the flat JSON schema maps
/// to one field; keys that do not belong to the selected experiment are
/// rejected.
struct ExperimentConfig {
  Experiment experiment = Experiment::gmm_theory;
  std::uint64_t seed = 0;

  // Noise ladder and sampler.
  int T = 10;
  double sigma_min = 0.01;
  double sigma_max = 1.0;
  int M = 100;
  std::vector<sampling::Variant> variants{sampling::Variant::pgdm_alg1,
                                          sampling::Variant::unconstrained,
                                          sampling::Variant::post_proc};
  int projection_start_t = -1;
  double snr_r = 0.16;
  int n_samples = 100;

  // Score model.
  std::string model = "analytic";  // analytic | mlp
  double data_variance = 1e-4;     // component variance of the empirical mixture
  std::vector<int> mlp_hidden{64, 64};
  std::string mlp_activation = "softplus";
  int mlp_epochs = 200;
  int mlp_batch_size = 64;
  double mlp_learning_rate = 1e-3;

  // Metrics.
  std::vector<double> tolerances{0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0};
  int sw_projections = 100;

  // Sweeps: parameter name (M or projection_start_t) and values.
  std::string sweep_param = "M";
  std::vector<int> sweep_values;

  // gmm_theory
  int gmm_dim = 2;
  std::vector<double> gmm_weights{0.4, 0.35, 0.25};
  std::vector<double> gmm_means{-1.5, 0.0, 1.5, 0.0, 0.0, 2.0};
  double gmm_variance = 0.25;
  std::vector<double> halfspace_normal{1.0, 0.0};
  double halfspace_offset = 0.0;
  int n_reference = 10000;
  std::vector<double> theorem_gammas{0.05, 0.1, 0.3, 0.5};
  std::vector<double> theorem_offsets{0.5, 1.0, 2.0};
  long long theorem_trials = 100000;
  int corollary_T = 50;
  int corollary_M = 100;
  double corollary_sigma_min = 0.01;
  double corollary_sigma_max = 1.0;
  int corollary_chains = 100;
  double corollary_offset = 1.0;
  double corollary_xi = 1e-3;
  bool mlp_check = true;
  std::vector<double> mlp_check_mean{1.0, -1.0};
  double mlp_check_variance = 1.0;
  int mlp_check_points = 2000;

  // physics_motion
  int frame_size = 16;
  int n_frames = 6;
  double gravity = -1.0;        // px/frame^2; negative selects 2 * frame_size / 64
  double moon_ratio = 1.62 / 9.81;
  double object_radius = -1.0;  // negative selects max(1, round(3 * frame_size / 64))
  int n_data = 1000;

  // trajectories
  std::string topography;  // map file, relative to the config file
  int n_points = 16;
  double margin = 0.02;

  // materials
  int texture_size = 16;
  double correlation_length = 1.5;
  double texture_gain = 2.0;
  double offset_min = -0.1;
  double offset_max = 1.3;
  std::vector<double> porosity_targets{0.1, 0.2, 0.3, 0.4, 0.5};
  double porosity_margin = 1e-3;

  /// Directory used to resolve relative file references.
  std::filesystem::path base_dir = ".";

  NoiseSchedule schedule() const;
  sampling::SamplerConfig sampler_config(sampling::Variant v) const;
};

/// Defaults for `experiment` before any keys are applied.
ExperimentConfig default_config(Experiment experiment);

/// Parses a flat JSON object. Throws ConfigError on unknown keys, wrong types
/// or invalid values.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Range and consistency checks; throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Canonical JSON of the resolved configuration (keys of this experiment only).
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a 64-bit hash of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace pgdm::harness
