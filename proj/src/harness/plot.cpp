#include "pgdm/harness/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgdm/errors.hpp"
#include "pgdm/harness/io.hpp"

namespace pgdm::harness {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(hi > lo)) {
      const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec) {
  if (series.empty()) throw ConfigError("emit_plot: no series");
  bool any_point = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("emit_plot: x and y lengths differ");
    any_point = any_point || !s.x.empty();
  }
  if (!any_point) throw ConfigError("emit_plot: series are empty");

  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double y) { return std::isfinite(y) && (!spec.log_y || y > 0.0); };

  Range xr, yr;
  std::vector<double> categories;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!usable(s.y[k]) || !std::isfinite(s.x[k])) continue;
      xr.add(s.x[k]);
      yr.add(ty(s.y[k]));
      categories.push_back(s.x[k]);
    }
  }
  if (!(yr.hi >= yr.lo)) throw ConfigError("emit_plot: no plottable values");
  if (spec.kind == PlotKind::bar && !spec.log_y) yr.add(0.0);
  xr.pad();
  yr.pad();
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (ty(y) - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      kWidth, kHeight);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + pw / 2, escape(spec.title));
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      kLeft, kTop, pw, ph);

  // Axis ticks.
  for (int k = 0; k <= 4; ++k) {
    const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    const double yv = spec.log_y ? std::pow(10.0, fy) : fy;
    const double y = kTop + (1.0 - k / 4.0) * ph;
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n",
                       kLeft, y, kLeft + pw, y);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n",
                       kLeft - 6, y + 4, yv);
  }
  if (spec.kind == PlotKind::line) {
    for (int k = 0; k <= 4; ++k) {
      const double xv = xr.lo + (xr.hi - xr.lo) * k / 4.0;
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                         px(xv), kTop + ph + 16, xv);
    }
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + pw / 2, kHeight - 10, escape(spec.x_label));
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">{}</text>\n",
      kTop + ph / 2, kTop + ph / 2, escape(spec.y_label + (spec.log_y ? " (log)" : "")));

  const double slot = pw / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double bar_w = slot * 0.8 / static_cast<double>(series.size());
  if (spec.kind == PlotKind::bar) {
    for (std::size_t c = 0; c < categories.size(); ++c) {
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                         kLeft + slot * (c + 0.5), kTop + ph + 16, categories[c]);
    }
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    if (spec.kind == PlotKind::line) {
      std::string pts;
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!usable(s.y[k])) continue;
        pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", px(s.x[k]), py(s.y[k]));
      }
      if (!pts.empty()) {
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                           color, pts);
      }
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!usable(s.y[k])) continue;
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n",
                           px(s.x[k]), py(s.y[k]), color);
      }
    } else {
      const double base = spec.log_y ? kTop + ph : py(0.0);
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!usable(s.y[k])) continue;
        const auto c = static_cast<std::size_t>(
            std::lower_bound(categories.begin(), categories.end(), s.x[k]) - categories.begin());
        const double x0 = kLeft + slot * c + slot * 0.1 + bar_w * si;
        const double top = py(s.y[k]);
        svg += fmt::format(
            "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x0,
            std::min(top, base), bar_w, std::abs(base - top), color);
      }
    }
    const double ly = kTop + 14.0 * si + 8;
    svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
                       kLeft + pw + 12, ly - 8, color);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kLeft + pw + 26, ly + 1,
                       escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const std::vector<Series>& series, const PlotSpec& spec,
               const std::filesystem::path& path) {
  write_text(path, render_svg(series, spec));
}

}  // namespace pgdm::harness
