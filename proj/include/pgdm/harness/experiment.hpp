#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgdm/harness/config.hpp"
#include "pgdm/projections.hpp"
#include "pgdm/score.hpp"

namespace pgdm::harness {

/// One constrained setting of an experiment (e.g. earth or moon gravity, one
/// porosity target). Chain j uses constraints[j], or constraints[0] when a
/// single constraint is shared.
struct Condition {
  std::string name;
  std::vector<std::shared_ptr<const projections::ConstraintSet>> constraints;
  /// Reference draws for the distributional metric (may be empty).
  std::vector<Vector> reference;
  /// Extra scalar metadata recorded in the report (e.g. porosity target).
  nlohmann::json info = nlohmann::json::object();

  const projections::ConstraintSet& constraint_for(std::size_t chain) const;
};

/// Everything an experiment needs, rebuilt deterministically from the config.
struct Task {
  ShapeTag shape = FlatShape{};
  Eigen::Index dim = 0;
  std::vector<Vector> train;
  std::vector<Vector> test;
  /// Unconstrained reference draws (GMM task only).
  std::vector<Vector> full_reference;
  std::vector<Condition> conditions;
  /// Exact score when the data law is known (GMM task); otherwise empty and
  /// the empirical mixture of `train` is used.
  std::shared_ptr<const score::GaussianMixture> data_law;
  /// Extra dataset description written by gen_data.
  nlohmann::json data_info = nlohmann::json::object();
};

Task build_task(const ExperimentConfig& cfg);

/// Writes the datasets (data_train.csv, data_test.csv and data.json).
nlohmann::json gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Trains the MLP score on the task's training data; writes model.ckpt and
/// train_loss.csv.
nlohmann::json train_model(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Score model of the config: analytic, or the MLP from out_dir/model.ckpt
/// (trained on the fly when absent).
std::shared_ptr<const score::ScoreField> make_score(const ExperimentConfig& cfg, const Task& task,
                                                   const std::filesystem::path& out_dir);

/// Runs every configured variant on every condition and writes
/// samples_<condition>_<variant>.csv (unconstrained: samples_unconstrained.csv).
nlohmann::json run_sampling(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Reads the sample files and writes metrics.json, satisfaction curves and plots.
nlohmann::json evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Theorem 1 grid and Corollary 1 run (gmm_theory only); writes theory.json
/// and trace files.
nlohmann::json verify_theory(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// DSM-trained MLP against the analytic score of a single Gaussian
/// (gmm_theory only); writes score_quality.json.
nlohmann::json score_quality(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Re-runs sampling and metrics for each value of cfg.sweep_param; writes
/// sweep.json, sweep.csv and sweep.svg.
nlohmann::json run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// All stages in order; writes report.json and returns it. Any failure is
/// rethrown as StageError naming the stage.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace pgdm::harness
