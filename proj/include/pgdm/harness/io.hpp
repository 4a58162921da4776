#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgdm/core.hpp"

namespace pgdm::harness {

/// Writes one flattened sample per CSV row and a JSON sidecar
/// `<path>.json` with {dim, shape_tag, seed, config_hash, count}.
void write_samples(const std::filesystem::path& csv_path, const std::vector<Vector>& samples,
                   const ShapeTag& shape, std::uint64_t seed, const std::string& config_hash);

/// Reads a CSV written by write_samples.
std::vector<Vector> read_samples(const std::filesystem::path& csv_path);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Writes `text` verbatim; throws IoError when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Two-column CSV with header `x_name,y_name`.
void write_xy_csv(const std::filesystem::path& path, const std::string& x_name,
                  const std::string& y_name, const std::vector<double>& xs,
                  const std::vector<double>& ys);

}  // namespace pgdm::harness
