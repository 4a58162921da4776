#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgdm/core.hpp"

namespace pgdm::score {

/// s(x, sigma) ~ grad_x log p_sigma(x). Implementations must be safe to call
/// concurrently from several chains.
class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual Vector evaluate(const Vector& x, double sigma) const = 0;
  virtual Eigen::Index dim() const = 0;
};

// ---------------------------------------------------------------------------
// Analytic Gaussian mixtures
// ---------------------------------------------------------------------------

/// Mixture of diagonal Gaussians. The VE-perturbed density at noise level
/// sigma is sum_k w_k N(x; mean_k, diag(var_k) + sigma^2 I).
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<Vector> means,
                  std::vector<Vector> variances, std::optional<Vector> optimum_mean = {});

  static GaussianMixture isotropic(Vector mean, double variance);
  /// Equal-weight mixture with one isotropic component per point. Its
  /// perturbed score is the exact score of the smoothed empirical distribution.
  static GaussianMixture from_points(const std::vector<Vector>& points, double variance);

  Eigen::Index components() const noexcept { return means_.cols(); }
  Eigen::Index dim() const noexcept { return means_.rows(); }
  const Vector& weights() const noexcept { return weights_; }
  /// Column k is the mean of component k.
  const Matrix& means() const noexcept { return means_; }
  const Matrix& variances() const noexcept { return variances_; }
  /// Global mode used by the convergence analysis (mean of component 0 when K = 1).
  const Vector& optimum_mean() const noexcept { return optimum_mean_; }

  Vector sample(RngStream& rng) const;

 private:
  Vector weights_;
  Vector log_weights_;
  Matrix means_;
  Matrix variances_;
  Vector optimum_mean_;
  // Per-component scalar variance when every component is isotropic.
  std::optional<Vector> iso_variances_;

  friend double gmm_log_density(const GaussianMixture&, const Vector&, double);
  friend Vector gmm_score(const GaussianMixture&, const Vector&, double);
};

double gmm_log_density(const GaussianMixture& gmm, const Vector& x, double sigma);
Vector gmm_score(const GaussianMixture& gmm, const Vector& x, double sigma);

class GmmScore final : public ScoreField {
 public:
  explicit GmmScore(GaussianMixture gmm) : gmm_(std::move(gmm)) {}
  Vector evaluate(const Vector& x, double sigma) const override { return gmm_score(gmm_, x, sigma); }
  Eigen::Index dim() const override { return gmm_.dim(); }
  const GaussianMixture& mixture() const noexcept { return gmm_; }

 private:
  GaussianMixture gmm_;
};

// ---------------------------------------------------------------------------
// MLP score network
// ---------------------------------------------------------------------------

enum class Activation { tanh, softplus };

/// How the noise level enters the network.
///   none:            s = f(x)
///   input_and_scale: s = f([x; sigma]) / sigma
enum class SigmaConditioning { none, input_and_scale };

std::string to_string(Activation a);
std::string to_string(SigmaConditioning c);
Activation parse_activation(const std::string& s);
SigmaConditioning parse_sigma_conditioning(const std::string& s);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

class MlpScoreNet {
 public:
  /// Zero-initialised network mapping R^data_dim to R^data_dim.
  MlpScoreNet(Eigen::Index data_dim, const std::vector<int>& hidden, Activation activation,
              SigmaConditioning conditioning);
  /// Network with explicit layers; shapes are validated.
  MlpScoreNet(std::vector<DenseLayer> layers, Activation activation,
              SigmaConditioning conditioning);

  /// Glorot-uniform weights, zero biases.
  void init_random(RngStream& rng);

  Eigen::Index data_dim() const noexcept { return data_dim_; }
  Eigen::Index input_dim() const noexcept;
  std::vector<int> widths() const;
  Activation activation() const noexcept { return activation_; }
  SigmaConditioning conditioning() const noexcept { return conditioning_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  Vector forward(const Vector& x, double sigma) const;
  /// Batched forward; column j of `xs` is evaluated at noise level sigmas[j].
  Matrix forward_batch(const Matrix& xs, const Vector& sigmas) const;

  /// Reverse-mode gradient of <upstream, forward(x, sigma)> with respect to
  /// every parameter, laid out like `layers()`.
  std::vector<DenseLayer> backward(const Vector& x, double sigma, const Vector& upstream) const;
  /// Batched version; gradients are summed over columns.
  std::vector<DenseLayer> backward_batch(const Matrix& xs, const Vector& sigmas,
                                         const Matrix& upstream) const;

  Eigen::Index parameter_count() const;
  /// Row-major weights followed by biases, layer by layer.
  Vector parameters() const;
  void set_parameters(const Vector& flat);
  static Vector flatten(const std::vector<DenseLayer>& layers);

 private:
  struct Tape {
    std::vector<Matrix> pre;   // pre-activations per layer
    std::vector<Matrix> post;  // inputs to each layer (post[0] is the network input)
  };
  Matrix build_input(const Matrix& xs, const Vector& sigmas) const;
  Matrix run(const Matrix& xs, const Vector& sigmas, Tape* tape) const;
  void check_batch(const Matrix& xs, const Vector& sigmas) const;

  Eigen::Index data_dim_;
  Activation activation_;
  SigmaConditioning conditioning_;
  std::vector<DenseLayer> layers_;
};

class MlpScore final : public ScoreField {
 public:
  explicit MlpScore(MlpScoreNet net) : net_(std::move(net)) {}
  Vector evaluate(const Vector& x, double sigma) const override { return net_.forward(x, sigma); }
  Eigen::Index dim() const override { return net_.data_dim(); }
  const MlpScoreNet& net() const noexcept { return net_; }

 private:
  MlpScoreNet net_;
};

// ---------------------------------------------------------------------------
// Denoising score matching
// ---------------------------------------------------------------------------

struct DsmConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  /// Anneal the learning rate to zero over training along a half cosine.
  bool cosine_decay = true;
  std::uint64_t seed = 0;
  /// Fraction of the data held out for validation.
  double heldout_fraction = 0.1;
};

struct DsmResult {
  MlpScoreNet net;
  std::vector<double> train_loss;    // mean weighted loss per epoch
  std::vector<double> heldout_loss;  // held-out loss after each epoch
  double initial_heldout_loss = 0.0;
};

/// Weighted DSM loss sigma^2 || s(x0 + sigma eps, sigma) + eps / sigma ||^2,
/// averaged over the given (x0, sigma, eps) triples.
double dsm_loss(const MlpScoreNet& net, const Matrix& clean, const Vector& sigmas,
                const Matrix& noise);

/// Fits `net` by Adam on the VE denoising score-matching objective with noise
/// levels drawn uniformly from the schedule.
DsmResult dsm_train(MlpScoreNet net, const std::vector<Vector>& data,
                    const NoiseSchedule& schedule, const DsmConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

/// One line of JSON header, then the flat parameter vector as little-endian
/// IEEE-754 doubles.
void save_checkpoint(const MlpScoreNet& net, const std::string& path);
MlpScoreNet load_checkpoint(const std::string& path);

}  // namespace pgdm::score
