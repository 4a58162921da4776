#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pgdm/harness/config.hpp"
#include "pgdm/harness/experiment.hpp"
#include "pgdm/harness/io.hpp"
#include "pgdm/harness/plot.hpp"

namespace fs = std::filesystem;
using namespace pgdm;
using namespace pgdm::harness;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ExperimentConfig resolve(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  validate(cfg);
  return cfg;
}

// Reads a two-column CSV with a header row.
Series read_xy(const fs::path& path, std::string& x_name, std::string& y_name) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("'{}' is empty", path.string()));
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw IoError(fmt::format("'{}': expected two columns", path.string()));
  x_name = line.substr(0, comma);
  y_name = line.substr(comma + 1);
  Series s{y_name, {}, {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
      throw IoError(fmt::format("'{}': bad row '{}'", path.string(), line));
    }
    try {
      s.x.push_back(std::stod(a));
      s.y.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw IoError(fmt::format("'{}': bad row '{}'", path.string(), line));
    }
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected diffusion sampling experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config file (flat JSON)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::function<void()> action;

  auto* gen = app.add_subcommand("gen-data", "Generate the experiment datasets");
  gen->callback([&] { action = [&] { gen_data(resolve(g), g.out); }; });

  auto* train = app.add_subcommand("train", "Train the MLP score model by denoising score matching");
  train->callback([&] { action = [&] { train_model(resolve(g), g.out); }; });

  auto* sample = app.add_subcommand("sample", "Run every configured sampler variant");
  sample->callback([&] { action = [&] { run_sampling(resolve(g), g.out); }; });

  auto* eval = app.add_subcommand("eval", "Compute metrics for sample files in --out");
  eval->callback([&] { action = [&] { evaluate(resolve(g), g.out); }; });

  auto* theory = app.add_subcommand("verify-theory", "Monte-Carlo checks of the convergence results");
  theory->callback([&] { action = [&] { verify_theory(resolve(g), g.out); }; });

  std::string sweep_param;
  std::vector<int> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Re-run sampling and metrics over M or the projection start");
  sweep->add_option("--param", sweep_param, "M or projection_start_t");
  sweep->add_option("--values", sweep_values, "Values to sweep");
  sweep->callback([&] {
    action = [&] {
      ExperimentConfig cfg = resolve(g);
      if (!sweep_param.empty()) cfg.sweep_param = sweep_param;
      if (!sweep_values.empty()) cfg.sweep_values = sweep_values;
      validate(cfg);
      run_sweep(cfg, g.out);
    };
  });

  std::string plot_input, plot_output, plot_title;
  bool plot_bar = false, plot_log = false;
  auto* plot = app.add_subcommand("plot", "Render a two-column CSV (with header) as SVG");
  plot->add_option("input", plot_input, "CSV file")->required();
  plot->add_option("-o,--output", plot_output, "SVG path (default: input with .svg)");
  plot->add_option("--title", plot_title, "Plot title");
  plot->add_flag("--bar", plot_bar, "Bar chart instead of lines");
  plot->add_flag("--log-y", plot_log, "Logarithmic y axis");
  plot->callback([&] {
    action = [&] {
      std::string xn, yn;
      Series s = read_xy(plot_input, xn, yn);
      fs::path out = plot_output.empty() ? fs::path(plot_input).replace_extension(".svg")
                                         : fs::path(plot_output);
      emit_plot({s}, PlotSpec{plot_title, xn, yn, plot_bar ? PlotKind::bar : PlotKind::line, plot_log},
                out);
    };
  });

  auto* run = app.add_subcommand("run", "All stages in order; writes report.json");
  run->callback([&] { action = [&] { run_experiment(resolve(g), g.out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    action();
  } catch (const StageError& e) {
    std::cerr << fmt::format("pgdm: [{}] {}\n", e.stage(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("pgdm: [{}] {}\n", app.get_subcommands().front()->get_name(), e.what());
    return 1;
  }
  return 0;
}
