#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pgdm/score.hpp"

namespace pgdm::score {

namespace {

constexpr const char* kFormat = "pgdm-mlp-checkpoint";
constexpr int kVersion = 1;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace

void save_checkpoint(const MlpScoreNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  const Vector params = net.parameters();
  nlohmann::json header = {{"format", kFormat},
                           {"version", kVersion},
                           {"widths", net.widths()},
                           {"activation", to_string(net.activation())},
                           {"sigma_conditioning", to_string(net.conditioning())},
                           {"parameter_count", params.size()},
                           {"layout", "per layer: weight row-major (out x in), then bias"},
                           {"encoding", "float64 little-endian"}};
  out << header.dump() << '\n';
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = params[i];
    std::memcpy(&bits, &v, sizeof bits);
    bits = to_little_endian(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw IoError(fmt::format("failed writing checkpoint '{}'", path));
}

MlpScoreNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("'{}': missing header", path));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("'{}': malformed header: {}", path, e.what()));
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion) {
    throw IoError(fmt::format("'{}': not a version {} checkpoint", path, kVersion));
  }
  const auto widths = header.at("widths").get<std::vector<int>>();
  const auto conditioning = parse_sigma_conditioning(header.at("sigma_conditioning"));
  const auto activation = parse_activation(header.at("activation"));
  if (widths.size() < 2) throw IoError(fmt::format("'{}': need at least two widths", path));

  std::vector<int> hidden(widths.begin() + 1, widths.end() - 1);
  MlpScoreNet net(widths.back(), hidden, activation, conditioning);
  if (net.input_dim() != widths.front()) {
    throw IoError(fmt::format("'{}': input width inconsistent with conditioning mode", path));
  }
  const auto count = header.at("parameter_count").get<Eigen::Index>();
  if (count != net.parameter_count()) {
    throw IoError(fmt::format("'{}': parameter_count {} does not match widths", path, count));
  }
  Vector params(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw IoError(fmt::format("'{}': truncated parameter block", path));
    }
    bits = to_little_endian(bits);
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    params[i] = v;
  }
  net.set_parameters(params);
  return net;
}

}  // namespace pgdm::score
