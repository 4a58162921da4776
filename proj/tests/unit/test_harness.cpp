#include <doctest.h>

#include <cmath>
#include <regex>

#include "pgdm/harness/config.hpp"
#include "pgdm/harness/datasets.hpp"
#include "pgdm/harness/experiment.hpp"
#include "pgdm/harness/io.hpp"
#include "pgdm/harness/plot.hpp"
#include "pgdm/metrics.hpp"
#include "tree_compare.hpp"

using namespace pgdm;
using namespace pgdm::harness;
using nlohmann::json;
namespace fs = std::filesystem;
namespace proj = pgdm::projections;

namespace {

std::vector<double> positions_by_recurrence(double p0, double a, int n) {
  std::vector<double> p{p0};
  double v = 0.0;
  for (int t = 1; t < n; ++t) {
    p.push_back(p.back() + v + a / 2.0);
    v += a;
  }
  return p;
}

json tiny_materials() {
  return {{"experiment", "materials"}, {"seed", 5},           {"T", 4},
          {"M", 3},                    {"n_samples", 3},      {"n_data", 30},
          {"texture_size", 8},         {"porosity_targets", {0.2, 0.4}}};
}

json tiny_gmm() {
  return {{"experiment", "gmm_theory"},
          {"seed", 6},
          {"T", 4},
          {"M", 5},
          {"sigma_max", 3.0},
          {"n_samples", 40},
          {"n_reference", 200},
          {"theorem_trials", 10000},
          {"theorem_gammas", {0.3}},
          {"theorem_offsets", {1.0}},
          {"corollary_T", 5},
          {"corollary_M", 5},
          {"corollary_chains", 4},
          {"mlp_check", false},
          {"sweep_values", {2, 5}}};
}

}  // namespace

TEST_CASE("falling-object positions") {
  CHECK(compute_positions(0.0, 2.0, 6) == std::vector<double>{0, 1, 4, 9, 16, 25});
  CHECK(compute_positions(3.0, 0.0, 4) == std::vector<double>{3, 3, 3, 3});
  RngStream rng(1, 0);
  for (int k = 0; k < 10; ++k) {
    const double p0 = rng.uniform(0, 10), a = rng.uniform(0, 3);
    const auto got = compute_positions(p0, a, 8);
    const auto want = positions_by_recurrence(p0, a, 8);
    for (std::size_t t = 0; t < 8; ++t) CHECK(got[t] == doctest::Approx(want[t]).epsilon(1e-14));
  }
  const double ratio = 1.62 / 9.81;
  const auto earth = compute_positions(0.0, 2.0, 6);
  const auto moon = compute_positions(0.0, 2.0 * ratio, 6);
  for (std::size_t t = 0; t < 6; ++t) CHECK(moon[t] == doctest::Approx(ratio * earth[t]));
}

TEST_CASE("rendered drops satisfy their own gravity only") {
  const auto spec = BallMotionSpec::scaled(16);
  const double moon = spec.gravity * 1.62 / 9.81;
  REQUIRE(ball_fits(spec, 2, 8, spec.gravity));
  const Vector video = render_ball(spec, 2, 8, spec.gravity);
  CHECK(video.size() == 16 * 16 * spec.n_frames);
  CHECK(ball_constraint(spec, 2, 8, spec.gravity).is_feasible(video, 0.0));
  CHECK_FALSE(ball_constraint(spec, 2, 8, moon).is_feasible(video, 0.0));
  CHECK(ball_constraint(spec, 2, 8, moon).is_feasible(render_ball(spec, 2, 8, moon), 0.0));
}

TEST_CASE("ball dataset split and validity") {
  auto spec = BallMotionSpec::scaled(16);
  spec.n_samples = 1000;
  RngStream rng(2, 0);
  const auto ds = gen_ball_dataset(spec, rng);
  CHECK(ds.train.size() == 900);
  CHECK(ds.test.size() == 100);
  for (const auto& s : ds.train) CHECK(ball_fits(spec, s.start_row, s.column, spec.gravity));
}

TEST_CASE("trajectory data without obstacles are straight lines") {
  TopographySpec spec;
  RngStream rng(3, 0);
  const auto ds = gen_trajectory_dataset(spec, 5, 8, 0.02, rng);
  REQUIRE(ds.paths.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK((ds.paths[k] - straight_path(ds.endpoints[k], 8)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("planned paths clear obstacles and are no shorter than the straight line") {
  const std::vector<proj::Circle> obstacles{proj::Circle{{0.0, 0.0}, 0.3}};
  const Endpoints e{{-0.8, 0.01}, {0.8, -0.02}};
  const Vector path = plan_path(e, obstacles, 12, 0.02);
  const proj::TrajectoryConstraint C(obstacles, e.start, e.goal, 12, 0.02);
  CHECK(C.is_feasible(path, 1e-6));
  CHECK(metrics::path_length(path) >= std::hypot(1.6, 0.03));

  TopographySpec spec;
  spec.training_obstacles = {proj::Circle{{-0.3, 0.3}, 0.25}, proj::Circle{{0.2, -0.35}, 0.25}};
  RngStream rng(4, 0);
  const auto ds = gen_trajectory_dataset(spec, 10, 12, 0.02, rng);
  for (std::size_t k = 0; k < ds.paths.size(); ++k) {
    const auto& ends = ds.endpoints[k];
    const proj::TrajectoryConstraint Ck(spec.training_obstacles, ends.start, ends.goal, 12, 0.02);
    CHECK(Ck.is_feasible(ds.paths[k], 1e-6));
    CHECK(metrics::path_length(ds.paths[k]) >=
          std::hypot(ends.goal[0] - ends.start[0], ends.goal[1] - ends.start[1]) - 1e-12);
  }
}

TEST_CASE("textures are bounded and carry their porosity") {
  TextureSpec spec;
  spec.size = 16;
  spec.correlation_length = 1.5;
  RngStream rng(5, 0);
  const auto ds = gen_texture_dataset(spec, 20, rng);
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(ds.images[k].maxCoeff() < 1.0);
    CHECK(ds.images[k].minCoeff() > -1.0);
    CHECK(ds.porosity[k] == metrics::porosity_measure(ds.images[k]));
  }
  const Vector noise = gaussian_noise(rng, 256);
  long long previous = 257;
  for (double offset = -1.0; offset <= 1.5; offset += 0.25) {
    const long long p = metrics::porosity_measure(texture_from_noise(spec, noise, offset));
    CHECK(p <= previous);
    previous = p;
  }
}

TEST_CASE("config parsing") {
  CHECK_NOTHROW(parse_config(tiny_materials()));
  json bad = tiny_materials();
  bad["no_such_key"] = 1;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  json foreign = tiny_materials();
  foreign["margin"] = 0.1;
  CHECK_THROWS_AS(parse_config(foreign), ConfigError);
  json wrong_type = tiny_materials();
  wrong_type["M"] = "many";
  CHECK_THROWS_AS(parse_config(wrong_type), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"seed", 1}}), ConfigError);
  CHECK(config_hash(parse_config(tiny_materials())) == config_hash(parse_config(tiny_materials())));
  CHECK(config_hash(parse_config(tiny_materials())).size() == 16);
}

TEST_CASE("samples round-trip through CSV") {
  const fs::path dir = support::fresh_temp_dir("pgdm_io_test");
  RngStream rng(6, 0);
  std::vector<Vector> s{gaussian_noise(rng, 3), gaussian_noise(rng, 3)};
  write_samples(dir / "s.csv", s, FlatShape{}, 1, "abc");
  const auto back = read_samples(dir / "s.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == s[0]);
  CHECK(back[1] == s[1]);
  const json side = read_json(dir / "s.csv.json");
  CHECK(side.at("count") == 2);
  CHECK(side.at("dim") == 3);
}

TEST_CASE("svg plots") {
  const PlotSpec spec{"t", "x", "y", PlotKind::line, false};
  const std::string one = render_svg({{"a", {1.0}, {2.0}}}, spec);
  std::size_t markers = 0;
  for (std::size_t pos = one.find("<circle"); pos != std::string::npos;
       pos = one.find("<circle", pos + 1)) {
    ++markers;
  }
  CHECK(markers == 1);

  const Series rising{"r", {0, 1, 2, 3, 4}, {0, 1, 4, 9, 16}};
  const std::string svg = render_svg({rising}, spec);
  CHECK(svg == render_svg({rising}, spec));
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex("points=\"([^\"]*)\"")));
  std::stringstream pts(m[1].str());
  std::string pair;
  double last_x = -1e9, last_y = 1e9;
  while (pts >> pair) {
    const double x = std::stod(pair.substr(0, pair.find(',')));
    const double y = std::stod(pair.substr(pair.find(',') + 1));
    CHECK(x > last_x);
    CHECK(y < last_y);  // screen y grows downward
    last_x = x;
    last_y = y;
  }
  CHECK_THROWS_AS(render_svg({}, spec), ConfigError);
}

TEST_CASE("materials run writes the documented artifacts and is reproducible") {
  const auto cfg = parse_config(tiny_materials());
  const fs::path a = support::fresh_temp_dir("pgdm_run_a");
  const fs::path b = support::fresh_temp_dir("pgdm_run_b");
  const json report = run_experiment(cfg, a);
  run_experiment(cfg, b);
  CHECK(support::tree_difference(a, b).empty());
  for (const char* f : {"config.resolved.json", "data_train.csv", "data.json", "metrics.json",
                        "report.json", "samples_unconstrained.csv", "samples_P0.20_pgdm_alg1.csv",
                        "samples_P0.40_post_proc.csv"}) {
    INFO(f);
    CHECK(fs::exists(a / f));
  }
  for (const char* key : {"experiment", "seed", "config_hash", "data", "metrics"}) {
    CHECK(report.contains(key));
  }
  const auto& pgdm = report.at("metrics").at("P0.20").at("variants").at("pgdm_alg1");
  CHECK(pgdm.at("feasible_fraction") == 1.0);
  CHECK(pgdm.at("porosity_exact_fraction") == 1.0);
}

TEST_CASE("gmm run covers theory and sweep stages") {
  const auto cfg = parse_config(tiny_gmm());
  const fs::path dir = support::fresh_temp_dir("pgdm_run_gmm");
  const json report = run_experiment(cfg, dir);
  CHECK(report.contains("theory"));
  CHECK(report.contains("sweep"));
  CHECK_FALSE(report.contains("score_quality"));
  for (const char* f : {"theorem1.csv", "corollary1_levels.csv", "corollary1_trace.csv",
                        "theory.json", "sweep.csv", "sweep.svg", "curve_halfspace.svg"}) {
    INFO(f);
    CHECK(fs::exists(dir / f));
  }
}

TEST_CASE("stage failures name the stage") {
  json j = {{"experiment", "trajectories"}, {"seed", 1}, {"topography", "missing_map.json"}};
  const auto cfg = parse_config(j, support::fresh_temp_dir("pgdm_missing_map"));
  try {
    run_experiment(cfg, support::fresh_temp_dir("pgdm_missing_map_out"));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "gen-data");
  }
}
