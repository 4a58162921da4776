#include "pgdm/harness/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace pgdm::harness {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

void write_samples(const std::filesystem::path& csv_path, const std::vector<Vector>& samples,
                   const ShapeTag& shape, std::uint64_t seed, const std::string& config_hash) {
  if (samples.empty()) throw ConfigError("write_samples: no samples");
  const Eigen::Index dim = samples.front().size();
  if (const auto n = shape_size(shape); n && static_cast<Eigen::Index>(*n) != dim) {
    throw DimensionError("write_samples: shape does not match sample dimension");
  }
  std::string text;
  for (const auto& s : samples) {
    if (s.size() != dim) throw DimensionError("write_samples: samples differ in dimension");
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (k > 0) text += ',';
      text += fmt::format("{:.17g}", s[k]);
    }
    text += '\n';
  }
  write_text(csv_path, text);

  nlohmann::json side;
  side["dim"] = dim;
  side["count"] = samples.size();
  side["shape_tag"] = shape_name(shape);
  side["seed"] = seed;
  side["config_hash"] = config_hash;
  write_json(csv_path.string() + ".json", side);
}

std::vector<Vector> read_samples(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", csv_path.string()));
  std::vector<Vector> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(fmt::format("'{}': bad number '{}'", csv_path.string(), cell));
      }
    }
    if (!out.empty() && static_cast<std::size_t>(out.front().size()) != values.size()) {
      throw DimensionError(fmt::format("'{}': ragged rows", csv_path.string()));
    }
    out.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void write_xy_csv(const std::filesystem::path& path, const std::string& x_name,
                  const std::string& y_name, const std::vector<double>& xs,
                  const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DimensionError("write_xy_csv: column lengths differ");
  std::string text = x_name + "," + y_name + "\n";
  for (std::size_t k = 0; k < xs.size(); ++k) text += fmt::format("{:.17g},{:.17g}\n", xs[k], ys[k]);
  write_text(path, text);
}

}  // namespace pgdm::harness
