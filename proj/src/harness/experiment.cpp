#include "pgdm/harness/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "pgdm/harness/datasets.hpp"
#include "pgdm/harness/io.hpp"
#include "pgdm/harness/plot.hpp"
#include "pgdm/metrics.hpp"
#include "pgdm/sampler.hpp"
#include "pgdm/theory.hpp"

namespace pgdm::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream ids for everything that is not a sampling chain. Chains use ids
// 0 .. n_samples - 1.
constexpr std::uint64_t kStreamBase = 1ULL << 40;
constexpr std::uint64_t kDataStream = kStreamBase + 1;
constexpr std::uint64_t kReferenceStream = kStreamBase + 2;
constexpr std::uint64_t kFullReferenceStream = kStreamBase + 3;
constexpr std::uint64_t kEndpointStream = kStreamBase + 4;
constexpr std::uint64_t kDirectionStream = kStreamBase + 5;
constexpr std::uint64_t kInitStream = kStreamBase + 6;
constexpr std::uint64_t kCheckDataStream = kStreamBase + 7;
constexpr std::uint64_t kTrainingSeedOffset = 0x9e3779b97f4a7c15ULL;

std::vector<Vector> to_points(const std::vector<double>& flat, int dim) {
  std::vector<Vector> out;
  for (std::size_t k = 0; k + static_cast<std::size_t>(dim) <= flat.size(); k += dim) {
    out.push_back(Eigen::Map<const Vector>(flat.data() + k, dim));
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

BallMotionSpec ball_spec(const ExperimentConfig& cfg) {
  BallMotionSpec spec = BallMotionSpec::scaled(cfg.frame_size);
  spec.n_frames = cfg.n_frames;
  spec.n_samples = cfg.n_data;
  if (cfg.gravity >= 0.0) spec.gravity = cfg.gravity;
  if (cfg.object_radius >= 0.0) spec.object_radius = cfg.object_radius;
  return spec;
}

TextureSpec texture_spec(const ExperimentConfig& cfg) {
  TextureSpec spec;
  spec.size = cfg.texture_size;
  spec.correlation_length = cfg.correlation_length;
  spec.gain = cfg.texture_gain;
  spec.offset_min = cfg.offset_min;
  spec.offset_max = cfg.offset_max;
  return spec;
}

void split(std::vector<Vector> all, double train_fraction, Task& task) {
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * all.size()));
  task.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  task.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
}

Task build_gmm_task(const ExperimentConfig& cfg) {
  Task task;
  task.shape = FlatShape{};
  task.dim = cfg.gmm_dim;
  std::vector<Vector> vars(cfg.gmm_weights.size(), Vector::Constant(cfg.gmm_dim, cfg.gmm_variance));
  task.data_law = std::make_shared<score::GaussianMixture>(
      cfg.gmm_weights, to_points(cfg.gmm_means, cfg.gmm_dim), std::move(vars));
  auto C = std::make_shared<projections::Halfspace>(to_vector(cfg.halfspace_normal),
                                                    cfg.halfspace_offset);

  RngStream full_rng(cfg.seed, kFullReferenceStream);
  long long inside = 0;
  for (int k = 0; k < cfg.n_reference; ++k) {
    task.full_reference.push_back(task.data_law->sample(full_rng));
    if (C->is_feasible(task.full_reference.back(), 0.0)) ++inside;
  }
  Condition cond{"halfspace", {C}, {}, json::object()};
  RngStream ref_rng(cfg.seed, kReferenceStream);
  long long drawn = 0;
  while (static_cast<int>(cond.reference.size()) < cfg.n_reference) {
    Vector x = task.data_law->sample(ref_rng);
    if (++drawn > 1000LL * cfg.n_reference) {
      throw InfeasibleError("gmm task: the constraint holds almost no data mass");
    }
    if (C->is_feasible(x, 0.0)) cond.reference.push_back(std::move(x));
  }
  const double mass = static_cast<double>(inside) / cfg.n_reference;
  cond.info["feasible_mass"] = mass;
  task.data_info["feasible_mass"] = mass;
  task.conditions.push_back(std::move(cond));
  task.train = task.full_reference;
  return task;
}

Task build_physics_task(const ExperimentConfig& cfg) {
  const BallMotionSpec spec = ball_spec(cfg);
  RngStream rng(cfg.seed, kDataStream);
  const BallDataset ds = gen_ball_dataset(spec, rng);
  if (static_cast<std::size_t>(cfg.n_samples) > ds.test.size()) {
    throw ConfigError(fmt::format("physics: n_samples {} exceeds the test split of {}",
                                  cfg.n_samples, ds.test.size()));
  }
  Task task;
  task.shape = GridShape{static_cast<std::size_t>(spec.frame_size), static_cast<std::size_t>(spec.frame_size),
                         static_cast<std::size_t>(spec.n_frames)};
  task.dim = static_cast<Eigen::Index>(spec.frame_size) * spec.frame_size * spec.n_frames;
  for (const auto& s : ds.train) task.train.push_back(s.frames);
  for (const auto& s : ds.test) task.test.push_back(s.frames);

  const double moon = spec.gravity * cfg.moon_ratio;
  Condition earth{"earth", {}, {}, json::object()};
  Condition lunar{"moon", {}, {}, json::object()};
  json starts = json::array();
  for (int j = 0; j < cfg.n_samples; ++j) {
    const auto& s = ds.test[static_cast<std::size_t>(j)];
    earth.constraints.push_back(std::make_shared<projections::ObjectPlacementConstraint>(
        ball_constraint(spec, s.start_row, s.column, spec.gravity)));
    earth.reference.push_back(s.frames);
    if (!ball_fits(spec, s.start_row, s.column, moon)) {
      throw ConfigError("physics: moon drop leaves the frame");
    }
    lunar.constraints.push_back(std::make_shared<projections::ObjectPlacementConstraint>(
        ball_constraint(spec, s.start_row, s.column, moon)));
    lunar.reference.push_back(render_ball(spec, s.start_row, s.column, moon));
    starts.push_back({s.start_row, s.column});
  }
  earth.info["gravity"] = spec.gravity;
  lunar.info["gravity"] = moon;
  task.conditions.push_back(std::move(earth));
  task.conditions.push_back(std::move(lunar));
  task.data_info = {{"frame_size", spec.frame_size},
                    {"n_frames", spec.n_frames},
                    {"gravity", spec.gravity},
                    {"moon_gravity", moon},
                    {"object_radius", spec.object_radius},
                    {"n_train", ds.train.size()},
                    {"n_test", ds.test.size()},
                    {"test_starts", starts}};
  return task;
}

Task build_trajectory_task(const ExperimentConfig& cfg) {
  const TopographySpec topo = load_topography(cfg.base_dir / cfg.topography);
  RngStream rng(cfg.seed, kDataStream);
  TrajectoryDataset ds = gen_trajectory_dataset(topo, cfg.n_data, cfg.n_points, cfg.margin, rng);
  Task task;
  task.shape = PathShape{static_cast<std::size_t>(cfg.n_points)};
  task.dim = 2 * cfg.n_points;
  task.train = ds.paths;

  const auto obstacles = topo.all_obstacles();
  Condition cond{fmt::format("map{}", topo.map_id), {}, {}, json::object()};
  RngStream end_rng(cfg.seed, kEndpointStream);
  json ends = json::array();
  for (int j = 0; j < cfg.n_samples; ++j) {
    const Endpoints e = sample_endpoints(topo, obstacles, cfg.margin, end_rng);
    cond.constraints.push_back(std::make_shared<projections::TrajectoryConstraint>(
        obstacles, e.start, e.goal, cfg.n_points, cfg.margin));
    ends.push_back({e.start[0], e.start[1], e.goal[0], e.goal[1]});
  }
  cond.info["map_id"] = topo.map_id;
  cond.info["obstacles"] = obstacles.size();
  cond.info["inference_obstacles"] = topo.inference_obstacles.size();
  task.conditions.push_back(std::move(cond));

  double straight = 0.0, planned = 0.0;
  for (std::size_t k = 0; k < ds.paths.size(); ++k) {
    planned += metrics::path_length(ds.paths[k]);
    straight += std::hypot(ds.endpoints[k].goal[0] - ds.endpoints[k].start[0],
                           ds.endpoints[k].goal[1] - ds.endpoints[k].start[1]);
  }
  task.data_info = {{"map_id", topo.map_id},
                    {"n_paths", ds.paths.size()},
                    {"mean_path_length", planned / ds.paths.size()},
                    {"mean_straight_distance", straight / ds.paths.size()},
                    {"run_endpoints", ends}};
  return task;
}

Task build_materials_task(const ExperimentConfig& cfg) {
  const TextureSpec spec = texture_spec(cfg);
  RngStream rng(cfg.seed, kDataStream);
  TextureDataset ds = gen_texture_dataset(spec, cfg.n_data, rng);
  Task task;
  task.shape = GridShape{static_cast<std::size_t>(spec.size), static_cast<std::size_t>(spec.size), 1};
  task.dim = static_cast<Eigen::Index>(spec.size) * spec.size;
  split(ds.images, 0.9, task);
  const auto N = static_cast<double>(task.dim);
  for (double P : cfg.porosity_targets) {
    // floor(P N); the small guard absorbs representation error in P.
    const auto k = static_cast<Eigen::Index>(std::floor(P * N + 1e-9));
    Condition cond{fmt::format("P{:.2f}", P),
                   {std::make_shared<projections::PorosityConstraint>(k, 0.0, cfg.porosity_margin)},
                   task.test,
                   {{"porosity", P}, {"target_count", k}}};
    task.conditions.push_back(std::move(cond));
  }
  double mean_p = 0.0;
  for (auto p : ds.porosity) mean_p += static_cast<double>(p) / N;
  task.data_info = {{"texture_size", spec.size},
                    {"n_images", ds.images.size()},
                    {"mean_porosity", mean_p / ds.images.size()},
                    {"porosity_counts", ds.porosity}};
  return task;
}

std::string samples_file(const std::string& condition, sampling::Variant v) {
  if (v == sampling::Variant::unconstrained) return "samples_unconstrained.csv";
  return fmt::format("samples_{}_{}.csv", condition, sampling::to_string(v));
}

score::DsmConfig dsm_config(const ExperimentConfig& cfg) {
  score::DsmConfig d;
  d.epochs = cfg.mlp_epochs;
  d.batch_size = cfg.mlp_batch_size;
  d.learning_rate = cfg.mlp_learning_rate;
  d.seed = cfg.seed + kTrainingSeedOffset;
  return d;
}

score::DsmResult fit_mlp(const ExperimentConfig& cfg, const std::vector<Vector>& data,
                         const NoiseSchedule& schedule) {
  score::MlpScoreNet net(data.front().size(), cfg.mlp_hidden,
                         score::parse_activation(cfg.mlp_activation),
                         score::SigmaConditioning::input_and_scale);
  RngStream init(cfg.seed, kInitStream);
  net.init_random(init);
  return score::dsm_train(std::move(net), data, schedule, dsm_config(cfg));
}

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

json curve_json(const metrics::SatisfactionCurve& c) {
  return {{"tolerances", c.tolerances}, {"fractions", c.fraction_satisfied}};
}

// Metrics of one sample batch against one condition.
json batch_metrics(const ExperimentConfig& cfg, const Condition& cond,
                   const std::vector<Vector>& samples, metrics::SatisfactionCurve* curve_out) {
  json m;
  std::size_t feasible0 = 0, feasible_solver = 0;
  double mean_dist = 0.0;
  std::vector<Vector> feasible_samples;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto& C = cond.constraint_for(j);
    if (C.is_feasible(samples[j], 0.0)) ++feasible0;
    if (C.is_feasible(samples[j], 1e-6)) {
      ++feasible_solver;
      feasible_samples.push_back(samples[j]);
    }
    mean_dist += C.distance_sq(samples[j]);
  }
  const double n = static_cast<double>(samples.size());
  m["n"] = samples.size();
  m["feasible_fraction"] = feasible0 / n;
  m["success_rate"] = feasible_solver / n;
  m["mean_distance_sq"] = mean_dist / n;

  // Satisfaction curve (one constraint per chain, so evaluate pointwise).
  std::vector<double> dist;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    dist.push_back(std::sqrt(cond.constraint_for(j).distance_sq(samples[j])));
  }
  metrics::SatisfactionCurve curve{cfg.tolerances, {}};
  for (double tol : cfg.tolerances) {
    const auto ok = std::count_if(dist.begin(), dist.end(), [tol](double d) { return d <= tol; });
    curve.fraction_satisfied.push_back(static_cast<double>(ok) / n);
  }
  m["satisfaction"] = curve_json(curve);
  if (curve_out) *curve_out = curve;

  if (!cond.reference.empty()) {
    RngStream dirs(cfg.seed, kDirectionStream);
    m["sliced_wasserstein"] =
        metrics::sliced_wasserstein(samples, cond.reference, cfg.sw_projections, dirs);
  }
  if (cfg.experiment == Experiment::trajectories) {
    double all = 0.0, feas = 0.0;
    for (const auto& s : samples) all += metrics::path_length(s);
    for (const auto& s : feasible_samples) feas += metrics::path_length(s);
    m["mean_path_length"] = all / n;
    m["mean_feasible_path_length"] =
        feasible_samples.empty() ? json(nullptr) : json(feas / feasible_samples.size());
  }
  if (cfg.experiment == Experiment::materials) {
    const auto k = cond.info.at("target_count").get<long long>();
    std::size_t exact = 0;
    double abs_err = 0.0;
    json counts = json::array();
    for (const auto& s : samples) {
      const long long p = metrics::porosity_measure(s, 0.0);
      counts.push_back(p);
      exact += p == k;
      abs_err += std::abs(static_cast<double>(p - k));
    }
    m["porosity_exact_fraction"] = exact / n;
    m["porosity_mean_abs_error"] = abs_err / n;
    m["porosity_counts"] = counts;
  }
  if (cfg.experiment == Experiment::physics_motion) {
    double worst = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const auto* C =
          dynamic_cast<const projections::ObjectPlacementConstraint*>(&cond.constraint_for(j));
      const double e = C->max_position_error(samples[j]);
      worst = std::max(worst, e);
      mean += e;
    }
    m["mean_position_error"] = std::isfinite(mean) ? json(mean / n) : json("inf");
    m["max_position_error"] = std::isfinite(worst) ? json(worst) : json("inf");
  }
  return m;
}

// Samples per (condition, variant); unconstrained chains are shared across
// conditions and post_proc projects them, which is the same computation the
// sampler performs for that variant under the same seed and streams.
struct SampleSet {
  std::vector<Vector> unconstrained;
  std::map<std::string, std::map<sampling::Variant, std::vector<Vector>>> by_condition;
};

std::vector<Vector> run_condition_chains(const ExperimentConfig& cfg,
                                         const sampling::SamplerConfig& sc,
                                         const score::ScoreField& score, const Condition& cond) {
  if (cond.constraints.size() == 1) {
    return sampling::sample(sc, score, *cond.constraints.front(), cfg.n_samples).samples;
  }
  std::vector<Vector> out;
  for (int j = 0; j < cfg.n_samples; ++j) {
    auto one = sc;
    one.stream_offset = static_cast<std::uint64_t>(j);
    out.push_back(
        sampling::sample(one, score, *cond.constraints[static_cast<std::size_t>(j)], 1).samples[0]);
  }
  return out;
}

SampleSet draw_samples(const ExperimentConfig& cfg, const Task& task,
                       const score::ScoreField& score) {
  SampleSet set;
  const bool need_unconstrained = std::any_of(cfg.variants.begin(), cfg.variants.end(), [](auto v) {
    return v == sampling::Variant::unconstrained || v == sampling::Variant::post_proc;
  });
  if (need_unconstrained) {
    const projections::Unconstrained free_space;
    set.unconstrained =
        sampling::sample(cfg.sampler_config(sampling::Variant::unconstrained), score, free_space,
                         cfg.n_samples)
            .samples;
  }
  for (const auto& cond : task.conditions) {
    auto& per = set.by_condition[cond.name];
    for (auto v : cfg.variants) {
      switch (v) {
        case sampling::Variant::unconstrained:
          per[v] = set.unconstrained;
          break;
        case sampling::Variant::post_proc: {
          std::vector<Vector> out;
          for (std::size_t j = 0; j < set.unconstrained.size(); ++j) {
            out.push_back(cond.constraint_for(j).try_project(set.unconstrained[j]).point);
          }
          per[v] = std::move(out);
          break;
        }
        default:
          per[v] = run_condition_chains(cfg, cfg.sampler_config(v), score, cond);
      }
    }
  }
  return set;
}

json evaluate_samples(const ExperimentConfig& cfg, const Task& task, const SampleSet& set,
                      const fs::path& out_dir, bool write_artifacts) {
  json result = json::object();
  for (const auto& cond : task.conditions) {
    json cj;
    cj["info"] = cond.info;
    std::vector<Series> curves;
    for (auto v : cfg.variants) {
      const auto& samples = set.by_condition.at(cond.name).at(v);
      metrics::SatisfactionCurve curve;
      json m = batch_metrics(cfg, cond, samples, &curve);
      if (v == sampling::Variant::unconstrained && !task.full_reference.empty()) {
        RngStream dirs(cfg.seed, kDirectionStream);
        m["sliced_wasserstein_full"] =
            metrics::sliced_wasserstein(samples, task.full_reference, cfg.sw_projections, dirs);
      }
      cj["variants"][sampling::to_string(v)] = m;
      curves.push_back({sampling::to_string(v), curve.tolerances, curve.fraction_satisfied});
      if (write_artifacts) {
        std::string csv = "tolerance,fraction\n";
        for (std::size_t k = 0; k < curve.tolerances.size(); ++k) {
          csv += fmt::format("{:.17g},{:.17g}\n", curve.tolerances[k], curve.fraction_satisfied[k]);
        }
        write_text(out_dir / fmt::format("curve_{}_{}.csv", cond.name, sampling::to_string(v)), csv);
      }
    }
    if (write_artifacts) {
      emit_plot(curves,
                PlotSpec{fmt::format("Constraint satisfaction ({})", cond.name),
                         "tolerance (projection distance)", "fraction satisfied", PlotKind::line,
                         false},
                out_dir / fmt::format("curve_{}.svg", cond.name));
    }
    result[cond.name] = cj;
  }
  return result;
}

}  // namespace

const projections::ConstraintSet& Condition::constraint_for(std::size_t chain) const {
  if (constraints.empty()) throw ConfigError("condition has no constraint");
  return constraints.size() == 1 ? *constraints.front() : *constraints.at(chain);
}

Task build_task(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::gmm_theory: return build_gmm_task(cfg);
    case Experiment::physics_motion: return build_physics_task(cfg);
    case Experiment::trajectories: return build_trajectory_task(cfg);
    case Experiment::materials: return build_materials_task(cfg);
  }
  throw ConfigError("unknown experiment");
}

json gen_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("gen-data", [&] {
    const Task task = build_task(cfg);
    const std::string hash = config_hash(cfg);
    write_samples(out_dir / "data_train.csv", task.train, task.shape, cfg.seed, hash);
    if (!task.test.empty()) {
      write_samples(out_dir / "data_test.csv", task.test, task.shape, cfg.seed, hash);
    }
    json info = task.data_info;
    info["n_train"] = task.train.size();
    info["n_test"] = task.test.size();
    info["shape_tag"] = shape_name(task.shape);
    write_json(out_dir / "data.json", info);
    return info;
  });
}

json train_model(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("train", [&] {
    const Task task = build_task(cfg);
    const auto result = fit_mlp(cfg, task.train, cfg.schedule());
    score::save_checkpoint(result.net, (out_dir / "model.ckpt").string());
    std::vector<double> epochs;
    for (std::size_t k = 0; k < result.train_loss.size(); ++k) epochs.push_back(k + 1.0);
    write_xy_csv(out_dir / "train_loss.csv", "epoch", "train_loss", epochs, result.train_loss);
    write_xy_csv(out_dir / "heldout_loss.csv", "epoch", "heldout_loss", epochs,
                 result.heldout_loss);
    emit_plot({{"train", epochs, result.train_loss}, {"held-out", epochs, result.heldout_loss}},
              PlotSpec{"DSM loss", "epoch", "loss", PlotKind::line, true},
              out_dir / "train_loss.svg");
    json j = {{"epochs", result.train_loss.size()},
              {"initial_heldout_loss", result.initial_heldout_loss},
              {"final_heldout_loss", result.heldout_loss.back()},
              {"final_train_loss", result.train_loss.back()},
              {"parameters", result.net.parameter_count()}};
    write_json(out_dir / "train.json", j);
    return j;
  });
}

std::shared_ptr<const score::ScoreField> make_score(const ExperimentConfig& cfg, const Task& task,
                                                   const fs::path& out_dir) {
  if (cfg.model == "mlp") {
    const fs::path ckpt = out_dir / "model.ckpt";
    if (!fs::exists(ckpt)) train_model(cfg, out_dir);
    auto net = score::load_checkpoint(ckpt.string());
    if (net.data_dim() != task.dim) throw DimensionError("checkpoint dimension does not match task");
    return std::make_shared<score::MlpScore>(std::move(net));
  }
  if (task.data_law) return std::make_shared<score::GmmScore>(*task.data_law);
  return std::make_shared<score::GmmScore>(
      score::GaussianMixture::from_points(task.train, cfg.data_variance));
}

json run_sampling(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("sample", [&] {
    const Task task = build_task(cfg);
    const auto score = make_score(cfg, task, out_dir);
    const SampleSet set = draw_samples(cfg, task, *score);
    const std::string hash = config_hash(cfg);
    json files = json::array();
    if (!set.unconstrained.empty()) {
      write_samples(out_dir / "samples_unconstrained.csv", set.unconstrained, task.shape, cfg.seed,
                    hash);
      files.push_back("samples_unconstrained.csv");
    }
    for (const auto& cond : task.conditions) {
      for (auto v : cfg.variants) {
        if (v == sampling::Variant::unconstrained) continue;
        const std::string name = samples_file(cond.name, v);
        write_samples(out_dir / name, set.by_condition.at(cond.name).at(v), task.shape, cfg.seed,
                      hash);
        files.push_back(name);
      }
    }
    return json{{"files", files}};
  });
}

json evaluate(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("eval", [&] {
    const Task task = build_task(cfg);
    SampleSet set;
    for (const auto& cond : task.conditions) {
      for (auto v : cfg.variants) {
        set.by_condition[cond.name][v] = read_samples(out_dir / samples_file(cond.name, v));
        if (set.by_condition[cond.name][v].size() != static_cast<std::size_t>(cfg.n_samples)) {
          throw DimensionError(fmt::format("{}: expected {} samples", samples_file(cond.name, v),
                                           cfg.n_samples));
        }
      }
    }
    json m = evaluate_samples(cfg, task, set, out_dir, true);
    write_json(out_dir / "metrics.json", m);
    return m;
  });
}

json verify_theory(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("verify-theory", [&] {
    if (cfg.experiment != Experiment::gmm_theory) {
      throw ConfigError("verify-theory needs the gmm_theory experiment");
    }
    json grid = json::array();
    std::string csv = "gamma,offset,rho,lhs_mean,lhs_ci,rhs_mean,rhs_ci,holds\n";
    bool all_hold = true;
    std::uint64_t run = 0;
    for (double g : cfg.theorem_gammas) {
      for (double c : cfg.theorem_offsets) {
        const auto probe = theory::make_halfline_probe(c, g);
        const auto r = theory::verify_theorem1(probe, cfg.theorem_trials,
                                               theory::criterion_region(probe), cfg.seed + run++);
        const double rho = theory::compute_rho(probe);
        all_hold = all_hold && r.holds;
        grid.push_back({{"gamma", g},
                        {"offset", c},
                        {"rho", rho},
                        {"n_trials", r.n_trials},
                        {"lhs_mean", r.lhs_mean},
                        {"lhs_ci", r.lhs_ci},
                        {"rhs_mean", r.rhs_mean},
                        {"rhs_ci", r.rhs_ci},
                        {"diff_mean", r.diff_mean},
                        {"diff_ci", r.diff_ci},
                        {"criterion_fraction", r.criterion_fraction},
                        {"holds", r.holds}});
        csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", g, c,
                           rho, r.lhs_mean, r.lhs_ci, r.rhs_mean, r.rhs_ci, r.holds ? 1 : 0);
      }
    }
    write_text(out_dir / "theorem1.csv", csv);

    const auto probe = theory::make_halfline_probe(cfg.corollary_offset, 0.5);
    const auto schedule =
        make_geometric_schedule(cfg.corollary_sigma_min, cfg.corollary_sigma_max, cfg.corollary_T);
    const auto cor = theory::verify_corollary1(probe, schedule, cfg.corollary_M, cfg.corollary_xi,
                                               cfg.corollary_chains, cfg.seed);
    const int T = cfg.corollary_T;
    const double first = cor.level_means.back();
    const double last = cor.level_means.front();
    // Non-increasing in sampling order over the final half of the ladder.
    const int half = T / 2;
    bool monotone = true;
    int violations = 0;
    for (int t = 1; t < half; ++t) {
      if (cor.level_means[static_cast<std::size_t>(t - 1)] >
          cor.level_means[static_cast<std::size_t>(t)]) {
        monotone = false;
        ++violations;
      }
    }
    std::vector<double> levels, means;
    for (int t = T; t >= 1; --t) {
      levels.push_back(t);
      means.push_back(cor.level_means[static_cast<std::size_t>(t - 1)]);
    }
    write_xy_csv(out_dir / "corollary1_levels.csv", "t", "mean_pre_error", levels, means);
    std::vector<double> steps;
    for (std::size_t k = 0; k < cor.error_trace.size(); ++k) steps.push_back(k + 1.0);
    write_xy_csv(out_dir / "corollary1_trace.csv", "step", "mean_pre_error", steps,
                 cor.error_trace);
    emit_plot({{"mean pre-projection error", levels, means}},
              PlotSpec{"Projection cost per noise level", "t (sampling runs from T to 1)",
                       "mean Error", PlotKind::line, true},
              out_dir / "corollary1_levels.svg");

    json j;
    j["theorem1"] = {{"grid", grid}, {"all_hold", all_hold}};
    j["corollary1"] = {{"reached", cor.reached},
                       {"first_t", cor.first_t},
                       {"first_i", cor.first_i},
                       {"final_error", cor.final_error},
                       {"xi", cfg.corollary_xi},
                       {"level_mean_T", first},
                       {"level_mean_1", last},
                       {"ratio_1_to_T", first > 0.0 ? json(last / first) : json(nullptr)},
                       {"final_half_monotone", monotone},
                       {"final_half_violations", violations},
                       {"levels_checked", half},
                       {"chains", cfg.corollary_chains}};
    write_json(out_dir / "theory.json", j);
    return j;
  });
}

json score_quality(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("score-quality", [&] {
    const Vector mean = to_vector(cfg.mlp_check_mean);
    const auto law = score::GaussianMixture::isotropic(mean, cfg.mlp_check_variance);
    RngStream rng(cfg.seed, kCheckDataStream);
    std::vector<Vector> data;
    for (int k = 0; k < cfg.mlp_check_points; ++k) data.push_back(law.sample(rng));
    const NoiseSchedule schedule = cfg.schedule();
    const auto fit = fit_mlp(cfg, data, schedule);
    const int mid = (schedule.levels() + 1) / 2;
    const double sigma = schedule.sigma(mid);

    // 20 x 20 grid within two standard deviations of the mean (first two
    // coordinates; any others stay at the mean).
    const double sd = std::sqrt(cfg.mlp_check_variance);
    double cos_sum = 0.0, cos_min = 1.0;
    int n = 0;
    for (int a = 0; a < 20; ++a) {
      for (int b = 0; b < 20; ++b) {
        Vector x = mean;
        x[0] += sd * (-2.0 + 4.0 * a / 19.0);
        if (x.size() > 1) x[1] += sd * (-2.0 + 4.0 * b / 19.0);
        const Vector s_true = score::gmm_score(law, x, sigma);
        const Vector s_net = fit.net.forward(x, sigma);
        const double denom = s_true.norm() * s_net.norm();
        const double c = denom > 0.0 ? s_true.dot(s_net) / denom : 0.0;
        cos_sum += c;
        cos_min = std::min(cos_min, c);
        ++n;
      }
    }
    json j = {{"sigma", sigma},
              {"level", mid},
              {"mean_cosine", cos_sum / n},
              {"min_cosine", cos_min},
              {"grid_points", n},
              {"initial_heldout_loss", fit.initial_heldout_loss},
              {"final_heldout_loss", fit.heldout_loss.back()},
              {"final_train_loss", fit.train_loss.back()},
              {"epochs", fit.train_loss.size()}};
    write_json(out_dir / "score_quality.json", j);
    return j;
  });
}

json run_sweep(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return run_stage("sweep", [&] {
    if (cfg.sweep_values.empty()) throw ConfigError("sweep_values is empty");
    const Task task = build_task(cfg);
    const auto score = make_score(cfg, task, out_dir);
    json rows = json::array();
    std::map<std::string, Series> series;
    std::string csv = fmt::format("{},condition,variant,feasible_fraction,mean_distance_sq,sliced_wasserstein\n",
                                  cfg.sweep_param);
    for (int value : cfg.sweep_values) {
      ExperimentConfig c = cfg;
      if (cfg.sweep_param == "M") {
        c.M = value;
      } else {
        c.projection_start_t = value;
      }
      validate(c);
      const SampleSet set = draw_samples(c, task, *score);
      const json m = evaluate_samples(c, task, set, out_dir, false);
      for (const auto& cond : task.conditions) {
        for (auto v : c.variants) {
          const auto& vm = m[cond.name]["variants"][sampling::to_string(v)];
          const double sw = vm.contains("sliced_wasserstein") ? vm["sliced_wasserstein"].get<double>()
                                                              : std::nan("");
          rows.push_back({{cfg.sweep_param, value},
                          {"condition", cond.name},
                          {"variant", sampling::to_string(v)},
                          {"metrics", vm}});
          csv += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}\n", value, cond.name,
                             sampling::to_string(v), vm["feasible_fraction"].get<double>(),
                             vm["mean_distance_sq"].get<double>(), sw);
          auto& s = series[cond.name + "/" + sampling::to_string(v)];
          s.name = cond.name + "/" + sampling::to_string(v);
          s.x.push_back(value);
          s.y.push_back(std::isnan(sw) ? vm["mean_distance_sq"].get<double>() : sw);
        }
      }
    }
    write_text(out_dir / "sweep.csv", csv);
    std::vector<Series> plot;
    for (auto& [_, s] : series) plot.push_back(s);
    emit_plot(plot,
              PlotSpec{fmt::format("Sweep over {}", cfg.sweep_param), cfg.sweep_param,
                       "sliced Wasserstein (or mean Error)", PlotKind::line, false},
              out_dir / "sweep.svg");
    json j = {{"param", cfg.sweep_param}, {"values", cfg.sweep_values}, {"rows", rows}};
    write_json(out_dir / "sweep.json", j);
    return j;
  });
}

json run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  run_stage("config", [&] {
    validate(cfg);
    fs::create_directories(out_dir);
    write_json(out_dir / "config.resolved.json", to_json(cfg));
    return 0;
  });
  json report;
  report["experiment"] = to_string(cfg.experiment);
  report["seed"] = cfg.seed;
  report["config_hash"] = config_hash(cfg);
  report["data"] = gen_data(cfg, out_dir);
  if (cfg.model == "mlp") report["training"] = train_model(cfg, out_dir);
  run_sampling(cfg, out_dir);
  report["metrics"] = evaluate(cfg, out_dir);
  if (cfg.experiment == Experiment::gmm_theory) {
    report["theory"] = verify_theory(cfg, out_dir);
    if (cfg.mlp_check) report["score_quality"] = score_quality(cfg, out_dir);
  }
  if (!cfg.sweep_values.empty()) report["sweep"] = run_sweep(cfg, out_dir);
  run_stage("report", [&] {
    write_json(out_dir / "report.json", report);
    return 0;
  });
  return report;
}

}  // namespace pgdm::harness
