#include "pgdm/core.hpp"

#include <fmt/format.h>

#include <cmath>

namespace pgdm {

std::optional<std::size_t> shape_size(const ShapeTag& shape) {
  return std::visit(
      [](const auto& s) -> std::optional<std::size_t> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GridShape>) {
          return s.height * s.width * s.frames;
        } else if constexpr (std::is_same_v<S, PathShape>) {
          return 2 * s.n_points;
        } else {
          return std::nullopt;
        }
      },
      shape);
}

std::string shape_name(const ShapeTag& shape) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GridShape>) {
          return fmt::format("grid({},{},{})", s.height, s.width, s.frames);
        } else if constexpr (std::is_same_v<S, PathShape>) {
          return fmt::format("path({},2)", s.n_points);
        } else {
          return "flat";
        }
      },
      shape);
}

StateVector::StateVector(Vector values, ShapeTag shape)
    : values_(std::move(values)), shape_(shape) {
  if (values_.size() == 0) {
    throw DimensionError("StateVector: dimension must be positive");
  }
  if (auto n = shape_size(shape_); n && *n != dim()) {
    throw DimensionError(fmt::format("StateVector: shape {} implies {} values, got {}",
                                     shape_name(shape_), *n, dim()));
  }
}

bool StateVector::all_finite() const { return values_.allFinite(); }

void require_finite(const Vector& v, const std::string& context) {
  if (!v.allFinite()) {
    throw NumericError(fmt::format("non-finite value in {}", context));
  }
}

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  if (sigmas_.size() < 2) {
    throw ConfigError("NoiseSchedule: need at least two noise levels");
  }
  for (std::size_t i = 0; i < sigmas_.size(); ++i) {
    if (!(sigmas_[i] > 0.0) || !std::isfinite(sigmas_[i])) {
      throw ConfigError("NoiseSchedule: sigmas must be positive and finite");
    }
    if (i > 0 && !(sigmas_[i] > sigmas_[i - 1])) {
      throw ConfigError("NoiseSchedule: sigmas must be strictly increasing");
    }
  }
  const double denom = 2.0 * sigmas_.back() * sigmas_.back();
  gammas_.reserve(sigmas_.size());
  for (double s : sigmas_) gammas_.push_back(s * s / denom);
}

double NoiseSchedule::sigma(int t) const {
  if (t < 1 || t > levels()) {
    throw ConfigError(fmt::format("NoiseSchedule: level {} outside [1, {}]", t, levels()));
  }
  return sigmas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::gamma(int t) const {
  if (t < 1 || t > levels()) {
    throw ConfigError(fmt::format("NoiseSchedule: level {} outside [1, {}]", t, levels()));
  }
  return gammas_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule NoiseSchedule::with_vp_betas(std::vector<double> betas) const {
  if (betas.size() != sigmas_.size()) {
    throw ConfigError("NoiseSchedule: beta count must equal the number of levels");
  }
  std::vector<double> alpha_bars;
  alpha_bars.reserve(betas.size());
  double prod = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("NoiseSchedule: betas must lie in (0, 1)");
    prod *= 1.0 - b;
    alpha_bars.push_back(prod);
  }
  NoiseSchedule out = *this;
  out.vp_betas_ = std::move(betas);
  out.vp_alpha_bars_ = std::move(alpha_bars);
  return out;
}

NoiseSchedule make_geometric_schedule(double sigma_min, double sigma_max, int T) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw ConfigError(
        fmt::format("geometric schedule: need 0 < sigma_min < sigma_max, got {} and {}",
                    sigma_min, sigma_max));
  }
  if (T < 2) throw ConfigError(fmt::format("geometric schedule: T must be >= 2, got {}", T));
  std::vector<double> sigmas(static_cast<std::size_t>(T));
  const double log_ratio = std::log(sigma_max / sigma_min);
  for (int t = 1; t <= T; ++t) {
    sigmas[static_cast<std::size_t>(t - 1)] =
        sigma_min * std::exp(log_ratio * static_cast<double>(t - 1) / static_cast<double>(T - 1));
  }
  sigmas.front() = sigma_min;
  sigmas.back() = sigma_max;
  return NoiseSchedule(std::move(sigmas));
}

std::vector<double> linear_betas(double beta_first, double beta_last, int T) {
  if (T < 2) throw ConfigError("linear_betas: T must be >= 2");
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    betas[static_cast<std::size_t>(t)] =
        beta_first + (beta_last - beta_first) * static_cast<double>(t) / static_cast<double>(T - 1);
  }
  return betas;
}

namespace {
std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream_id) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream_id),
                       static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  auto seq = make_seed_seq(seed, stream_id);
  engine_.seed(seq);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

Vector gaussian_noise(RngStream& rng, Eigen::Index dim) {
  if (dim < 1) throw DimensionError("gaussian_noise: dim must be >= 1");
  Vector out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) out[i] = rng.normal();
  return out;
}

}  // namespace pgdm
