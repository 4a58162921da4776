#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pgdm::harness {

enum class PlotKind { line, bar };

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  PlotKind kind = PlotKind::line;
  bool log_y = false;
};

/// Standalone SVG text. Identical input gives identical bytes.
std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec);

/// Writes render_svg() to `path`. Throws ConfigError on empty input and
/// IoError when the file cannot be written.
void emit_plot(const std::vector<Series>& series, const PlotSpec& spec,
               const std::filesystem::path& path);

}  // namespace pgdm::harness
