// Acceptance suite: runs the shipped experiment configs and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pgdm/harness/config.hpp"
#include "pgdm/harness/experiment.hpp"
#include "pgdm/theory.hpp"
#include "tree_compare.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pgdm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Run {
  harness::ExperimentConfig cfg;
  json report;
  double seconds = 0.0;
  fs::path dir;
};

fs::path source_dir() { return fs::path(PGDM_SOURCE_DIR); }

Run run_config(const std::string& name, const fs::path& out_root) {
  Run r;
  r.cfg = harness::load_config(source_dir() / "configs" / (name + ".json"));
  r.dir = out_root / name;
  fs::remove_all(r.dir);
  const auto t0 = Clock::now();
  r.report = harness::run_experiment(r.cfg, r.dir);
  r.seconds = seconds_since(t0);
  std::printf("  ran %s in %.1f s\n", name.c_str(), r.seconds);
  std::fflush(stdout);
  return r;
}

const json& variant(const json& report, const std::string& cond, const std::string& v) {
  return report.at("metrics").at(cond).at("variants").at(v);
}

int failures = 0;

void report_line(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d: %s  %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", title.c_str(),
              o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

// Every PGDM chain of every condition is feasible at tolerance 0.
Outcome all_pgdm_feasible(const Run& r, std::size_t& chains) {
  for (const auto& [cond, body] : r.report.at("metrics").items()) {
    const auto& m = body.at("variants").at("pgdm_alg1");
    chains += m.at("n").get<std::size_t>();
    if (m.at("feasible_fraction").get<double>() != 1.0) {
      return {false, fmt::format("{}/{} feasible fraction {}", harness::to_string(r.cfg.experiment),
                                 cond, m.at("feasible_fraction").get<double>())};
    }
  }
  return {true, ""};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out_root =
      argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "pgdm_acceptance";
  fs::create_directories(out_root);
  std::printf("acceptance artifacts under %s\n", out_root.string().c_str());

  const Run gmm = run_config("gmm_theory", out_root);
  const Run physics = run_config("physics_motion", out_root);
  const Run materials = run_config("materials", out_root);
  const Run map1 = run_config("trajectories_map1", out_root);
  const Run map2 = run_config("trajectories_map2", out_root);

  report_line(1, "zero-tolerance feasibility of PGDM", [&]() -> Outcome {
    std::string detail;
    for (const Run* r : {&gmm, &physics, &materials}) {
      std::size_t chains = 0;
      const auto o = all_pgdm_feasible(*r, chains);
      if (!o.pass) return o;
      if (chains < 100) {
        return {false, fmt::format("{} has only {} PGDM chains",
                                   harness::to_string(r->cfg.experiment), chains)};
      }
      detail += fmt::format("{} {} chains; ", harness::to_string(r->cfg.experiment), chains);
    }
    const double total = gmm.seconds + physics.seconds + materials.seconds;
    detail += fmt::format("runtime {:.1f} s of 300 s", total);
    return {total < 300.0, detail};
  });

  report_line(2, "trajectory success and path length", [&]() -> Outcome {
    bool ok = true;
    std::string detail;
    for (const Run* r : {&map1, &map2}) {
      for (const auto& [cond, body] : r->report.at("metrics").items()) {
        const auto& p = body.at("variants").at("pgdm_alg1");
        const auto& q = body.at("variants").at("post_proc");
        const double sp = p.at("success_rate"), sq = q.at("success_rate");
        const double lp = p.at("mean_path_length");
        const double lq = q.at("mean_feasible_path_length").is_null()
                              ? 0.0
                              : q.at("mean_feasible_path_length").get<double>();
        const bool this_ok = p.at("n") == 50 && sp == 1.0 && sq <= 0.9 && sq < sp && lq > 0.0 &&
                             lp <= 1.15 * lq;
        ok = ok && this_ok;
        detail += fmt::format("{}: PGDM {:.2f} vs post-proc {:.2f}, length {:.3f} vs {:.3f}; ",
                              cond, sp, sq, lp, lq);
      }
    }
    return {ok, detail};
  });

  report_line(3, "projection cost vanishes along the ladder", [&]() -> Outcome {
    const auto& c = gmm.report.at("theory").at("corollary1");
    const double ratio = c.at("ratio_1_to_T").is_null() ? 1.0 : c.at("ratio_1_to_T").get<double>();
    const bool monotone = c.at("final_half_monotone");
    const bool ok = c.at("chains") == 100 && gmm.cfg.corollary_T == 50 && gmm.cfg.corollary_M == 100 &&
                    c.at("levels_checked") == 25 && ratio < 1e-3 && monotone;
    return {ok, fmt::format("ratio t=1 / t=T {:.3e}, non-increasing over the last 25 levels: {} "
                            "({} violations)",
                            ratio, monotone, c.at("final_half_violations").get<int>())};
  });

  report_line(4, "projected start is never worse (Monte Carlo)", [&]() -> Outcome {
    bool ok = gmm.cfg.theorem_trials >= 100000;
    double slowest = 0.0;
    std::uint64_t run = 0;
    int cells = 0;
    for (double g : gmm.cfg.theorem_gammas) {
      for (double c : gmm.cfg.theorem_offsets) {
        const auto probe = theory::make_halfline_probe(c, g);
        const auto t0 = Clock::now();
        const auto r = theory::verify_theorem1(probe, gmm.cfg.theorem_trials,
                                               theory::criterion_region(probe), gmm.cfg.seed + run++);
        slowest = std::max(slowest, seconds_since(t0));
        ok = ok && r.holds;
        ++cells;
      }
    }
    ok = ok && gmm.report.at("theory").at("theorem1").at("all_hold").get<bool>() && slowest < 10.0;
    return {ok, fmt::format("{} grid cells, {} trials each, slowest {:.2f} s", cells,
                            gmm.cfg.theorem_trials, slowest)};
  });

  report_line(5, "distributional fidelity on the constrained mixture", [&]() -> Outcome {
    const json& info = gmm.report.at("metrics").at("halfspace").at("info");
    const double mass = info.at("feasible_mass");
    const double sw_pgdm = variant(gmm.report, "halfspace", "pgdm_alg1").at("sliced_wasserstein");
    const double sw_post = variant(gmm.report, "halfspace", "post_proc").at("sliced_wasserstein");
    const double sw_free =
        variant(gmm.report, "halfspace", "unconstrained").at("sliced_wasserstein_full");
    const bool ok = mass >= 0.3 && sw_pgdm <= 1.5 * sw_free && sw_post >= sw_pgdm;
    return {ok, fmt::format("feasible mass {:.3f}; SW PGDM {:.4f} <= 1.5 x {:.4f}; post-proc {:.4f}",
                            mass, sw_pgdm, sw_free, sw_post)};
  });

  report_line(6, "trained score matches the analytic score", [&]() -> Outcome {
    const fs::path dir = out_root / "score_quality_timing";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto t0 = Clock::now();
    const json q = harness::score_quality(gmm.cfg, dir);
    const double secs = seconds_since(t0);
    const double cos = q.at("mean_cosine");
    const bool same = q == gmm.report.at("score_quality");
    return {cos >= 0.95 && secs < 120.0 && same,
            fmt::format("mean cosine {:.4f} on a 20x20 grid at sigma {:.4f}; training {:.1f} s", cos,
                        q.at("sigma").get<double>(), secs)};
  });

  report_line(7, "porosity is exact", [&]() -> Outcome {
    bool ok = true;
    std::string detail;
    for (const auto& [cond, body] : materials.report.at("metrics").items()) {
      const auto& m = body.at("variants").at("pgdm_alg1");
      const double exact = m.at("porosity_exact_fraction");
      ok = ok && exact == 1.0;
      detail += fmt::format("{} {:.2f}; ", cond, exact);
    }
    ok = ok && materials.report.at("metrics").size() == 5;
    return {ok, detail};
  });

  report_line(8, "steps-per-level sweep plateau", [&]() -> Outcome {
    std::map<int, double> sw;
    for (const auto& row : gmm.report.at("sweep").at("rows")) {
      if (row.at("variant") == "pgdm_alg1") {
        sw[row.at("M").get<int>()] = row.at("metrics").at("sliced_wasserstein").get<double>();
      }
    }
    if (!sw.count(10) || !sw.count(80) || !sw.count(100)) return {false, "sweep lacks M = 10/80/100"};
    const bool ok = sw[100] <= 1.1 * sw[80] && sw[10] > sw[80];
    return {ok, fmt::format("SW at M=10 {:.4f}, M=80 {:.4f}, M=100 {:.4f}", sw[10], sw[80], sw[100])};
  });

  report_line(9, "oracle equivalences", [&]() -> Outcome {
    bool ok = true;
    std::string detail;
    for (const auto& [name, check] :
         std::vector<std::pair<std::string, std::function<oracle::Check()>>>{
             {"dykstra", oracle::check_dykstra_grid},
             {"porosity", oracle::check_porosity_bruteforce},
             {"midpoint", oracle::check_trajectory_midpoint},
             {"gmm score", oracle::check_gmm_score_fd},
             {"backprop", oracle::check_mlp_backprop_fd}}) {
      const auto c = check();
      ok = ok && c.ok;
      detail += fmt::format("{} {}; ", name, c.ok ? "ok" : "MISMATCH " + c.detail);
    }
    return {ok, detail};
  });

  report_line(10, "byte-identical reruns", [&]() -> Outcome {
    const fs::path again = out_root / "materials_rerun";
    fs::remove_all(again);
    harness::run_experiment(materials.cfg, again);
    const std::string diff = support::tree_difference(materials.dir, again);
    return {diff.empty(), diff.empty() ? "materials artifacts identical" : diff};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
