#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "pgdm/score.hpp"

namespace pgdm::score {

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vector> means,
                                 std::vector<Vector> variances,
                                 std::optional<Vector> optimum_mean) {
  const std::size_t k = weights.size();
  if (k == 0 || means.size() != k || variances.size() != k) {
    throw ConfigError("GaussianMixture: weights, means and variances must have equal nonzero size");
  }
  const Eigen::Index d = means.front().size();
  if (d == 0) throw DimensionError("GaussianMixture: zero-dimensional mean");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("GaussianMixture: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError(fmt::format("GaussianMixture: weights sum to {}, expected 1", total));
  }
  weights_ = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(k));
  log_weights_ = weights_.array().log();
  means_.resize(d, static_cast<Eigen::Index>(k));
  variances_.resize(d, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    if (means[i].size() != d) throw DimensionError("GaussianMixture: mean dimension mismatch");
    if (variances[i].size() == 1 && d > 1) {
      variances_.col(col).setConstant(variances[i][0]);
    } else if (variances[i].size() == d) {
      variances_.col(col) = variances[i];
    } else {
      throw DimensionError("GaussianMixture: variance dimension mismatch");
    }
    means_.col(col) = means[i];
  }
  if (!(variances_.array() > 0.0).all()) {
    throw ConfigError("GaussianMixture: variances must be strictly positive");
  }
  const Vector first_row = variances_.row(0).transpose();
  if ((variances_.rowwise() - first_row.transpose()).cwiseAbs().maxCoeff() == 0.0) {
    iso_variances_ = first_row;
  }
  if (optimum_mean) {
    if (optimum_mean->size() != d) throw DimensionError("GaussianMixture: optimum dimension");
    optimum_mean_ = *optimum_mean;
  } else {
    Eigen::Index best = 0;
    weights_.maxCoeff(&best);
    optimum_mean_ = means_.col(best);
  }
}

GaussianMixture GaussianMixture::isotropic(Vector mean, double variance) {
  const Eigen::Index d = mean.size();
  Vector mean_copy = mean;
  return GaussianMixture({1.0}, {std::move(mean)}, {Vector::Constant(d, variance)},
                         std::move(mean_copy));
}

GaussianMixture GaussianMixture::from_points(const std::vector<Vector>& points, double variance) {
  if (points.empty()) throw ConfigError("GaussianMixture::from_points: no points");
  const double w = 1.0 / static_cast<double>(points.size());
  std::vector<double> weights(points.size(), w);
  // Equal weights may not sum to exactly 1 in floating point; fold the error
  // into the first weight.
  double total = 0.0;
  for (double x : weights) total += x;
  weights.front() += 1.0 - total;
  const Eigen::Index d = points.front().size();
  std::vector<Vector> vars(points.size(), Vector::Constant(d, variance));
  return GaussianMixture(std::move(weights), points, std::move(vars), points.front());
}

Vector GaussianMixture::sample(RngStream& rng) const {
  double u = rng.uniform();
  Eigen::Index k = 0;
  for (; k + 1 < components(); ++k) {
    u -= weights_[k];
    if (u < 0.0) break;
  }
  Vector out(dim());
  for (Eigen::Index j = 0; j < dim(); ++j) {
    out[j] = means_(j, k) + std::sqrt(variances_(j, k)) * rng.normal();
  }
  return out;
}

namespace {

// Isotropic components: log w_k - 0.5 (|x - m_k|^2 / s_k + d log(2 pi s_k)).
Vector isotropic_log_terms(const Vector& log_weights, const Matrix& means, const Vector& iso_var,
                           const Vector& x, double sigma) {
  const Eigen::ArrayXd total_var = iso_var.array() + sigma * sigma;
  const Eigen::ArrayXd sq = (means.colwise() - x).colwise().squaredNorm().transpose().array();
  const double d = static_cast<double>(x.size());
  return (log_weights.array() -
          0.5 * (sq / total_var + d * (2.0 * std::numbers::pi * total_var).log()))
      .matrix();
}

// Per-component log N(x; mean_k, var_k + sigma^2) + log w_k.
Vector component_log_terms(const Vector& log_weights, const Matrix& means, const Matrix& variances,
                           const Vector& x, double sigma) {
  const double s2 = sigma * sigma;
  const Eigen::ArrayXXd total_var = variances.array() + s2;
  const Eigen::ArrayXXd diff = means.array().colwise() - x.array();
  const Eigen::ArrayXd quad = (diff.square() / total_var).colwise().sum().transpose();
  const Eigen::ArrayXd log_det = total_var.log().colwise().sum().transpose();
  const double d = static_cast<double>(x.size());
  return (log_weights.array() - 0.5 * (quad + log_det + d * std::log(2.0 * std::numbers::pi)))
      .matrix();
}

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void check_args(const GaussianMixture& gmm, const Vector& x, double sigma) {
  if (x.size() != gmm.dim()) {
    throw DimensionError(
        fmt::format("GaussianMixture: point has dim {}, mixture has dim {}", x.size(), gmm.dim()));
  }
  if (!(sigma >= 0.0)) throw ConfigError("GaussianMixture: sigma must be non-negative");
}

}  // namespace

double gmm_log_density(const GaussianMixture& gmm, const Vector& x, double sigma) {
  check_args(gmm, x, sigma);
  if (gmm.iso_variances_) {
    return log_sum_exp(
        isotropic_log_terms(gmm.log_weights_, gmm.means_, *gmm.iso_variances_, x, sigma));
  }
  return log_sum_exp(component_log_terms(gmm.log_weights_, gmm.means_, gmm.variances_, x, sigma));
}

Vector gmm_score(const GaussianMixture& gmm, const Vector& x, double sigma) {
  check_args(gmm, x, sigma);
  if (gmm.iso_variances_) {
    const Vector logs =
        isotropic_log_terms(gmm.log_weights_, gmm.means_, *gmm.iso_variances_, x, sigma);
    const double lse = log_sum_exp(logs);
    // sum_k r_k (m_k - x) / s_k
    const Vector scaled = ((logs.array() - lse).exp() /
                           (gmm.iso_variances_->array() + sigma * sigma)).matrix();
    return gmm.means_ * scaled - scaled.sum() * x;
  }
  const Vector logs = component_log_terms(gmm.log_weights_, gmm.means_, gmm.variances_, x, sigma);
  const double lse = log_sum_exp(logs);
  const Vector resp = (logs.array() - lse).exp().matrix();
  const Eigen::ArrayXXd total_var = gmm.variances_.array() + sigma * sigma;
  const Matrix pull = ((gmm.means_.array().colwise() - x.array()) / total_var).matrix();
  return pull * resp;
}

}  // namespace pgdm::score
