#include "pgdm/harness/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>

namespace pgdm::harness {

using nlohmann::json;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::gmm_theory: return "gmm_theory";
    case Experiment::physics_motion: return "physics_motion";
    case Experiment::trajectories: return "trajectories";
    case Experiment::materials: return "materials";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& s) {
  if (s == "gmm_theory") return Experiment::gmm_theory;
  if (s == "physics_motion") return Experiment::physics_motion;
  if (s == "trajectories") return Experiment::trajectories;
  if (s == "materials") return Experiment::materials;
  throw ConfigError(fmt::format("unknown experiment '{}'", s));
}

NoiseSchedule ExperimentConfig::schedule() const {
  return make_geometric_schedule(sigma_min, sigma_max, T);
}

sampling::SamplerConfig ExperimentConfig::sampler_config(sampling::Variant v) const {
  sampling::SamplerConfig sc{schedule()};
  sc.M = M;
  sc.projection_start_t = projection_start_t;
  sc.variant = v;
  sc.snr_r = snr_r;
  sc.seed = seed;
  return sc;
}

namespace {

enum Mask : unsigned {
  kGmm = 1u << 0,
  kPhysics = 1u << 1,
  kTraj = 1u << 2,
  kMat = 1u << 3,
  kAll = kGmm | kPhysics | kTraj | kMat,
};

unsigned mask_of(Experiment e) {
  switch (e) {
    case Experiment::gmm_theory: return kGmm;
    case Experiment::physics_motion: return kPhysics;
    case Experiment::trajectories: return kTraj;
    case Experiment::materials: return kMat;
  }
  return 0;
}

template <class T>
T read_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("expected a string");
    } else {
      if (!v.is_array()) throw ConfigError("expected an array");
      for (const auto& e : v) {
        if (e.is_object() || e.is_array()) throw ConfigError("nested values are not allowed");
      }
    }
    return v.get<T>();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

struct Field {
  const char* name;
  unsigned mask;
  std::function<void(ExperimentConfig&, const json&)> read;
  std::function<json(const ExperimentConfig&)> write;
};

template <class T>
Field make_field(const char* name, unsigned mask, T ExperimentConfig::*member) {
  return Field{name, mask,
               [name, member](ExperimentConfig& c, const json& v) {
                 c.*member = read_as<T>(v, name);
               },
               [member](const ExperimentConfig& c) { return json(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(make_field("seed", kAll, &ExperimentConfig::seed));
    f.push_back(make_field("T", kAll, &ExperimentConfig::T));
    f.push_back(make_field("sigma_min", kAll, &ExperimentConfig::sigma_min));
    f.push_back(make_field("sigma_max", kAll, &ExperimentConfig::sigma_max));
    f.push_back(make_field("M", kAll, &ExperimentConfig::M));
    f.push_back(Field{"variants", kAll,
                      [](ExperimentConfig& c, const json& v) {
                        c.variants.clear();
                        for (const auto& s : read_as<std::vector<std::string>>(v, "variants")) {
                          c.variants.push_back(sampling::parse_variant(s));
                        }
                      },
                      [](const ExperimentConfig& c) {
                        json a = json::array();
                        for (auto v : c.variants) a.push_back(sampling::to_string(v));
                        return a;
                      }});
    f.push_back(make_field("projection_start_t", kAll, &ExperimentConfig::projection_start_t));
    f.push_back(make_field("snr_r", kAll, &ExperimentConfig::snr_r));
    f.push_back(make_field("n_samples", kAll, &ExperimentConfig::n_samples));
    f.push_back(make_field("model", kAll, &ExperimentConfig::model));
    f.push_back(make_field("data_variance", kPhysics | kTraj | kMat, &ExperimentConfig::data_variance));
    f.push_back(make_field("mlp_hidden", kAll, &ExperimentConfig::mlp_hidden));
    f.push_back(make_field("mlp_activation", kAll, &ExperimentConfig::mlp_activation));
    f.push_back(make_field("mlp_epochs", kAll, &ExperimentConfig::mlp_epochs));
    f.push_back(make_field("mlp_batch_size", kAll, &ExperimentConfig::mlp_batch_size));
    f.push_back(make_field("mlp_learning_rate", kAll, &ExperimentConfig::mlp_learning_rate));
    f.push_back(make_field("tolerances", kAll, &ExperimentConfig::tolerances));
    f.push_back(make_field("sw_projections", kAll, &ExperimentConfig::sw_projections));
    f.push_back(make_field("sweep_param", kAll, &ExperimentConfig::sweep_param));
    f.push_back(make_field("sweep_values", kAll, &ExperimentConfig::sweep_values));

    f.push_back(make_field("gmm_dim", kGmm, &ExperimentConfig::gmm_dim));
    f.push_back(make_field("gmm_weights", kGmm, &ExperimentConfig::gmm_weights));
    f.push_back(make_field("gmm_means", kGmm, &ExperimentConfig::gmm_means));
    f.push_back(make_field("gmm_variance", kGmm, &ExperimentConfig::gmm_variance));
    f.push_back(make_field("halfspace_normal", kGmm, &ExperimentConfig::halfspace_normal));
    f.push_back(make_field("halfspace_offset", kGmm, &ExperimentConfig::halfspace_offset));
    f.push_back(make_field("n_reference", kGmm, &ExperimentConfig::n_reference));
    f.push_back(make_field("theorem_gammas", kGmm, &ExperimentConfig::theorem_gammas));
    f.push_back(make_field("theorem_offsets", kGmm, &ExperimentConfig::theorem_offsets));
    f.push_back(make_field("theorem_trials", kGmm, &ExperimentConfig::theorem_trials));
    f.push_back(make_field("corollary_T", kGmm, &ExperimentConfig::corollary_T));
    f.push_back(make_field("corollary_M", kGmm, &ExperimentConfig::corollary_M));
    f.push_back(make_field("corollary_sigma_min", kGmm, &ExperimentConfig::corollary_sigma_min));
    f.push_back(make_field("corollary_sigma_max", kGmm, &ExperimentConfig::corollary_sigma_max));
    f.push_back(make_field("corollary_chains", kGmm, &ExperimentConfig::corollary_chains));
    f.push_back(make_field("corollary_offset", kGmm, &ExperimentConfig::corollary_offset));
    f.push_back(make_field("corollary_xi", kGmm, &ExperimentConfig::corollary_xi));
    f.push_back(make_field("mlp_check", kGmm, &ExperimentConfig::mlp_check));
    f.push_back(make_field("mlp_check_mean", kGmm, &ExperimentConfig::mlp_check_mean));
    f.push_back(make_field("mlp_check_variance", kGmm, &ExperimentConfig::mlp_check_variance));
    f.push_back(make_field("mlp_check_points", kGmm, &ExperimentConfig::mlp_check_points));

    f.push_back(make_field("frame_size", kPhysics, &ExperimentConfig::frame_size));
    f.push_back(make_field("n_frames", kPhysics, &ExperimentConfig::n_frames));
    f.push_back(make_field("gravity", kPhysics, &ExperimentConfig::gravity));
    f.push_back(make_field("moon_ratio", kPhysics, &ExperimentConfig::moon_ratio));
    f.push_back(make_field("object_radius", kPhysics, &ExperimentConfig::object_radius));
    f.push_back(make_field("n_data", kPhysics | kTraj | kMat, &ExperimentConfig::n_data));

    f.push_back(make_field("topography", kTraj, &ExperimentConfig::topography));
    f.push_back(make_field("n_points", kTraj, &ExperimentConfig::n_points));
    f.push_back(make_field("margin", kTraj, &ExperimentConfig::margin));

    f.push_back(make_field("texture_size", kMat, &ExperimentConfig::texture_size));
    f.push_back(make_field("correlation_length", kMat, &ExperimentConfig::correlation_length));
    f.push_back(make_field("texture_gain", kMat, &ExperimentConfig::texture_gain));
    f.push_back(make_field("offset_min", kMat, &ExperimentConfig::offset_min));
    f.push_back(make_field("offset_max", kMat, &ExperimentConfig::offset_max));
    f.push_back(make_field("porosity_targets", kMat, &ExperimentConfig::porosity_targets));
    f.push_back(make_field("porosity_margin", kMat, &ExperimentConfig::porosity_margin));
    return f;
  }();
  return table;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("config: " + message);
}

}  // namespace

ExperimentConfig default_config(Experiment experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::gmm_theory:
      c.sigma_max = 3.0;
      c.n_samples = 10000;
      c.tolerances = {0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
      break;
    case Experiment::physics_motion:
      c.sigma_max = 10.0;
      c.M = 10;
      c.tolerances = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
      break;
    case Experiment::trajectories:
      c.M = 20;
      c.n_samples = 50;
      c.n_data = 300;
      c.tolerances = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
      break;
    case Experiment::materials:
      c.sigma_max = 10.0;
      c.M = 20;
      c.n_samples = 20;
      c.n_data = 500;
      c.tolerances = {0.0, 0.01, 0.1, 0.5, 1.0, 2.0};
      break;
  }
  return c;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  if (!j.contains("experiment")) throw ConfigError("config: missing key 'experiment'");
  ExperimentConfig cfg = default_config(parse_experiment(read_as<std::string>(j["experiment"],
                                                                              "experiment")));
  cfg.base_dir = base_dir;
  const unsigned mask = mask_of(cfg.experiment);
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") continue;
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (key == f.name) field = &f;
    }
    if (!field || !(field->mask & mask)) {
      throw ConfigError(fmt::format("config: unknown key '{}' for experiment {}", key,
                                    to_string(cfg.experiment)));
    }
    field->read(cfg, value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config file '{}': {}", path.string(), e.what()));
  }
  return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".")
                                                    : path.parent_path());
}

void validate(const ExperimentConfig& c) {
  require(c.T >= 2, "T must be >= 2");
  require(c.sigma_min > 0.0 && c.sigma_min < c.sigma_max, "need 0 < sigma_min < sigma_max");
  require(c.M >= 1, "M must be >= 1");
  require(!c.variants.empty(), "variants must not be empty");
  require(c.projection_start_t >= -1 && c.projection_start_t <= c.T,
          "projection_start_t must be -1 (= T) or in [0, T]");
  require(c.snr_r > 0.0, "snr_r must be positive");
  require(c.n_samples >= 1, "n_samples must be >= 1");
  require(c.model == "analytic" || c.model == "mlp", "model must be 'analytic' or 'mlp'");
  require(c.data_variance > 0.0, "data_variance must be positive");
  require(!c.mlp_hidden.empty(), "mlp_hidden must list at least one width");
  for (int w : c.mlp_hidden) require(w >= 1, "mlp_hidden widths must be positive");
  score::parse_activation(c.mlp_activation);
  require(c.mlp_epochs >= 1 && c.mlp_batch_size >= 1 && c.mlp_learning_rate > 0.0,
          "mlp training parameters must be positive");
  require(!c.tolerances.empty() && std::is_sorted(c.tolerances.begin(), c.tolerances.end()) &&
              c.tolerances.front() >= 0.0,
          "tolerances must be non-negative and ascending");
  require(c.sw_projections >= 1, "sw_projections must be >= 1");
  require(c.sweep_param == "M" || c.sweep_param == "projection_start_t",
          "sweep_param must be 'M' or 'projection_start_t'");

  switch (c.experiment) {
    case Experiment::gmm_theory: {
      require(c.gmm_dim >= 1, "gmm_dim must be >= 1");
      require(!c.gmm_weights.empty(), "gmm_weights must not be empty");
      require(c.gmm_means.size() == c.gmm_weights.size() * static_cast<std::size_t>(c.gmm_dim),
              "gmm_means must hold gmm_dim values per component");
      require(c.gmm_variance > 0.0, "gmm_variance must be positive");
      require(c.halfspace_normal.size() == static_cast<std::size_t>(c.gmm_dim),
              "halfspace_normal must have gmm_dim entries");
      require(c.n_reference >= 1, "n_reference must be >= 1");
      require(!c.theorem_gammas.empty() && !c.theorem_offsets.empty(),
              "theorem grids must not be empty");
      for (double g : c.theorem_gammas) require(g > 0.0 && g < 1.0, "theorem_gammas in (0, 1)");
      for (double o : c.theorem_offsets) require(o > 0.0, "theorem_offsets must be positive");
      require(c.theorem_trials >= 10000, "theorem_trials must be >= 10^4");
      require(c.corollary_T >= 2 && c.corollary_M >= 1 && c.corollary_chains >= 1,
              "corollary run sizes must be positive");
      require(c.corollary_sigma_min > 0.0 && c.corollary_sigma_min < c.corollary_sigma_max,
              "need 0 < corollary_sigma_min < corollary_sigma_max");
      require(c.corollary_offset > 0.0 && c.corollary_xi > 0.0,
              "corollary_offset and corollary_xi must be positive");
      require(c.mlp_check_mean.size() >= 1 && c.mlp_check_variance > 0.0 &&
                  c.mlp_check_points >= 10,
              "invalid mlp_check parameters");
      break;
    }
    case Experiment::physics_motion:
      require(c.frame_size >= 4 && c.n_frames >= 1, "frame_size >= 4 and n_frames >= 1");
      require(c.moon_ratio > 0.0, "moon_ratio must be positive");
      require(c.n_data >= 10, "n_data must be >= 10");
      break;
    case Experiment::trajectories:
      require(!c.topography.empty(), "topography map file required");
      require(c.n_points >= 2, "n_points must be >= 2");
      require(c.margin >= 0.0, "margin must be non-negative");
      require(c.n_data >= 1, "n_data must be >= 1");
      break;
    case Experiment::materials:
      require(c.texture_size >= 4, "texture_size must be >= 4");
      require(c.correlation_length > 0.0 && c.texture_gain > 0.0,
              "correlation_length and texture_gain must be positive");
      require(c.offset_min <= c.offset_max, "offset_min must not exceed offset_max");
      require(!c.porosity_targets.empty(), "porosity_targets must not be empty");
      for (double p : c.porosity_targets) require(p >= 0.0 && p <= 1.0, "porosity targets in [0, 1]");
      require(c.porosity_margin > 0.0, "porosity_margin must be positive");
      require(c.n_data >= 1, "n_data must be >= 1");
      break;
  }
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(cfg.experiment);
  const unsigned mask = mask_of(cfg.experiment);
  for (const auto& f : fields()) {
    if (f.mask & mask) j[f.name] = f.write(cfg);
  }
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace pgdm::harness
