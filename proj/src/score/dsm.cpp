#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pgdm/score.hpp"

namespace pgdm::score {

namespace {

struct AdamState {
  Vector m;
  Vector v;
  int step = 0;
};

void adam_update(Vector& params, const Vector& grad, AdamState& st, double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++st.step;
  st.m = beta1 * st.m + (1.0 - beta1) * grad;
  st.v = beta2 * st.v + (1.0 - beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, st.step);
  const double c2 = 1.0 - std::pow(beta2, st.step);
  params.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + eps);
}

// Gradient of dsm_loss with respect to the score output, column-wise.
Matrix loss_upstream(const Matrix& scores, const Vector& sigmas, const Matrix& noise) {
  Matrix g(scores.rows(), scores.cols());
  const double inv_b = 1.0 / static_cast<double>(scores.cols());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    const double s = sigmas[j];
    g.col(j) = 2.0 * inv_b * s * s * (scores.col(j) + noise.col(j) / s);
  }
  return g;
}

}  // namespace

double dsm_loss(const MlpScoreNet& net, const Matrix& clean, const Vector& sigmas,
                const Matrix& noise) {
  Matrix noisy = clean;
  for (Eigen::Index j = 0; j < clean.cols(); ++j) noisy.col(j) += sigmas[j] * noise.col(j);
  const Matrix scores = net.forward_batch(noisy, sigmas);
  double total = 0.0;
  for (Eigen::Index j = 0; j < clean.cols(); ++j) {
    const double s = sigmas[j];
    total += s * s * (scores.col(j) + noise.col(j) / s).squaredNorm();
  }
  return total / static_cast<double>(clean.cols());
}

DsmResult dsm_train(MlpScoreNet net, const std::vector<Vector>& data,
                    const NoiseSchedule& schedule, const DsmConfig& cfg) {
  if (data.empty()) throw ConfigError("dsm_train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw ConfigError("dsm_train: epochs, batch size and learning rate must be positive");
  }
  if (!(cfg.heldout_fraction >= 0.0 && cfg.heldout_fraction < 1.0)) {
    throw ConfigError("dsm_train: heldout_fraction must lie in [0, 1)");
  }
  const Eigen::Index d = net.data_dim();
  for (const auto& x : data) {
    if (x.size() != d) throw DimensionError("dsm_train: data dimension does not match network");
  }

  RngStream rng(cfg.seed, 0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());

  auto n_heldout = static_cast<std::size_t>(
      std::floor(cfg.heldout_fraction * static_cast<double>(data.size())));
  if (data.size() >= 2 && cfg.heldout_fraction > 0.0) n_heldout = std::max<std::size_t>(n_heldout, 1);
  const std::vector<std::size_t> heldout(order.begin(),
                                         order.begin() + static_cast<std::ptrdiff_t>(n_heldout));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_heldout),
                                 order.end());

  const int levels = schedule.levels();
  auto draw_sigma = [&](RngStream& r) {
    return schedule.sigma(static_cast<int>(r.uniform_int(1, levels)));
  };

  // Held-out evaluation uses frozen noise so epochs are comparable.
  const std::vector<std::size_t>& eval_idx = heldout.empty() ? train : heldout;
  Matrix eval_clean(d, static_cast<Eigen::Index>(eval_idx.size()));
  Vector eval_sigmas(eval_clean.cols());
  Matrix eval_noise(d, eval_clean.cols());
  {
    RngStream eval_rng(cfg.seed, 1);
    for (Eigen::Index j = 0; j < eval_clean.cols(); ++j) {
      eval_clean.col(j) = data[eval_idx[static_cast<std::size_t>(j)]];
      eval_sigmas[j] = draw_sigma(eval_rng);
      eval_noise.col(j) = gaussian_noise(eval_rng, d);
    }
  }

  DsmResult result{net, {}, {}, 0.0};
  result.initial_heldout_loss = dsm_loss(net, eval_clean, eval_sigmas, eval_noise);

  Vector params = net.parameters();
  AdamState adam{Vector::Zero(params.size()), Vector::Zero(params.size()), 0};
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (train.size() + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng.engine());
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t end = std::min(train.size(), start + batch);
      const auto b = static_cast<Eigen::Index>(end - start);
      Matrix clean(d, b);
      Vector sigmas(b);
      Matrix noise(d, b);
      for (Eigen::Index j = 0; j < b; ++j) {
        clean.col(j) = data[train[start + static_cast<std::size_t>(j)]];
        sigmas[j] = draw_sigma(rng);
        noise.col(j) = gaussian_noise(rng, d);
      }
      Matrix noisy = clean;
      for (Eigen::Index j = 0; j < b; ++j) noisy.col(j) += sigmas[j] * noise.col(j);

      const Matrix scores = net.forward_batch(noisy, sigmas);
      double batch_loss = 0.0;
      for (Eigen::Index j = 0; j < b; ++j) {
        batch_loss += sigmas[j] * sigmas[j] * (scores.col(j) + noise.col(j) / sigmas[j]).squaredNorm();
      }
      epoch_loss += batch_loss;
      seen += static_cast<std::size_t>(b);

      const auto grads = net.backward_batch(noisy, sigmas, loss_upstream(scores, sigmas, noise));
      double lr = cfg.learning_rate;
      if (cfg.cosine_decay) {
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(adam.step) / total_steps));
      }
      adam_update(params, MlpScoreNet::flatten(grads), adam, lr);
      if (!params.allFinite()) {
        throw TrainingError(fmt::format("dsm_train: non-finite parameters in epoch {}", epoch),
                            epoch);
      }
      net.set_parameters(params);
    }
    const double mean_loss = epoch_loss / static_cast<double>(seen);
    if (!std::isfinite(mean_loss)) {
      throw TrainingError(fmt::format("dsm_train: loss diverged in epoch {}", epoch), epoch);
    }
    result.train_loss.push_back(mean_loss);
    result.heldout_loss.push_back(dsm_loss(net, eval_clean, eval_sigmas, eval_noise));
  }
  result.net = std::move(net);
  return result;
}

}  // namespace pgdm::score
