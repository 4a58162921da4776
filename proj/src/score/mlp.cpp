#include <fmt/format.h>

#include <cmath>

#include "pgdm/score.hpp"

namespace pgdm::score {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }

std::string to_string(SigmaConditioning c) {
  return c == SigmaConditioning::none ? "none" : "input_and_scale";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "softplus") return Activation::softplus;
  throw ConfigError(fmt::format("unknown activation '{}'", s));
}

SigmaConditioning parse_sigma_conditioning(const std::string& s) {
  if (s == "none") return SigmaConditioning::none;
  if (s == "input_and_scale") return SigmaConditioning::input_and_scale;
  throw ConfigError(fmt::format("unknown sigma conditioning '{}'", s));
}

namespace {

Eigen::ArrayXXd activate(Activation a, const Eigen::ArrayXXd& z) {
  if (a == Activation::tanh) return z.tanh();
  // softplus(z) = max(z, 0) + log1p(exp(-|z|))
  return z.max(0.0) + (-z.abs()).exp().log1p();
}

Eigen::ArrayXXd activate_derivative(Activation a, const Eigen::ArrayXXd& z) {
  if (a == Activation::tanh) return 1.0 - z.tanh().square();
  return 1.0 / (1.0 + (-z).exp());
}

}  // namespace

MlpScoreNet::MlpScoreNet(Eigen::Index data_dim, const std::vector<int>& hidden,
                         Activation activation, SigmaConditioning conditioning)
    : data_dim_(data_dim), activation_(activation), conditioning_(conditioning) {
  if (data_dim < 1) throw ConfigError("MlpScoreNet: data_dim must be positive");
  Eigen::Index in = input_dim();
  for (int w : hidden) {
    if (w < 1) throw ConfigError("MlpScoreNet: hidden widths must be positive");
    layers_.push_back({Matrix::Zero(w, in), Vector::Zero(w)});
    in = w;
  }
  layers_.push_back({Matrix::Zero(data_dim, in), Vector::Zero(data_dim)});
}

MlpScoreNet::MlpScoreNet(std::vector<DenseLayer> layers, Activation activation,
                         SigmaConditioning conditioning)
    : activation_(activation), conditioning_(conditioning), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("MlpScoreNet: at least one layer required");
  data_dim_ = layers_.back().weight.rows();
  if (layers_.front().weight.cols() != input_dim()) {
    throw DimensionError(fmt::format("MlpScoreNet: first layer takes {} inputs, expected {}",
                                     layers_.front().weight.cols(), input_dim()));
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.rows()) {
      throw DimensionError(fmt::format("MlpScoreNet: layer {} bias size mismatch", l));
    }
    if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows()) {
      throw DimensionError(fmt::format("MlpScoreNet: layer {} input size mismatch", l));
    }
  }
}

Eigen::Index MlpScoreNet::input_dim() const noexcept {
  return data_dim_ + (conditioning_ == SigmaConditioning::input_and_scale ? 1 : 0);
}

std::vector<int> MlpScoreNet::widths() const {
  std::vector<int> w{static_cast<int>(input_dim())};
  for (const auto& layer : layers_) w.push_back(static_cast<int>(layer.weight.rows()));
  return w;
}

void MlpScoreNet::init_random(RngStream& rng) {
  for (auto& layer : layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight(r, c) = rng.uniform(-limit, limit);
      }
    }
    layer.bias.setZero();
  }
}

void MlpScoreNet::check_batch(const Matrix& xs, const Vector& sigmas) const {
  if (xs.rows() != data_dim_) {
    throw DimensionError(
        fmt::format("MlpScoreNet: input has dim {}, network expects {}", xs.rows(), data_dim_));
  }
  if (sigmas.size() != xs.cols()) {
    throw DimensionError("MlpScoreNet: one sigma per batch column required");
  }
  if (conditioning_ == SigmaConditioning::input_and_scale && !(sigmas.array() > 0.0).all()) {
    throw ConfigError("MlpScoreNet: sigma must be positive with input_and_scale conditioning");
  }
}

Matrix MlpScoreNet::build_input(const Matrix& xs, const Vector& sigmas) const {
  if (conditioning_ == SigmaConditioning::none) return xs;
  Matrix in(input_dim(), xs.cols());
  in.topRows(data_dim_) = xs;
  in.row(data_dim_) = sigmas.transpose();
  return in;
}

Matrix MlpScoreNet::run(const Matrix& xs, const Vector& sigmas, Tape* tape) const {
  check_batch(xs, sigmas);
  Matrix h = build_input(xs, sigmas);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix a = layers_[l].weight * h;
    a.colwise() += layers_[l].bias;
    if (tape) {
      tape->post.push_back(h);
      tape->pre.push_back(a);
    }
    if (l + 1 < layers_.size()) {
      h = activate(activation_, a.array()).matrix();
    } else {
      h = std::move(a);
    }
  }
  if (conditioning_ == SigmaConditioning::input_and_scale) {
    h.array().rowwise() /= sigmas.transpose().array();
  }
  return h;
}

Vector MlpScoreNet::forward(const Vector& x, double sigma) const {
  return run(x, Vector::Constant(1, sigma), nullptr).col(0);
}

Matrix MlpScoreNet::forward_batch(const Matrix& xs, const Vector& sigmas) const {
  return run(xs, sigmas, nullptr);
}

std::vector<DenseLayer> MlpScoreNet::backward(const Vector& x, double sigma,
                                              const Vector& upstream) const {
  return backward_batch(x, Vector::Constant(1, sigma), upstream);
}

std::vector<DenseLayer> MlpScoreNet::backward_batch(const Matrix& xs, const Vector& sigmas,
                                                    const Matrix& upstream) const {
  if (upstream.rows() != data_dim_ || upstream.cols() != xs.cols()) {
    throw DimensionError("MlpScoreNet::backward: upstream gradient shape mismatch");
  }
  Tape tape;
  run(xs, sigmas, &tape);

  Matrix delta = upstream;
  if (conditioning_ == SigmaConditioning::input_and_scale) {
    delta.array().rowwise() /= sigmas.transpose().array();
  }
  std::vector<DenseLayer> grads(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grads[l].weight = delta * tape.post[l].transpose();
    grads[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = layers_[l].weight.transpose() * delta;
      delta = (back.array() * activate_derivative(activation_, tape.pre[l - 1].array())).matrix();
    }
  }
  return grads;
}

Eigen::Index MlpScoreNet::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Vector MlpScoreNet::flatten(const std::vector<DenseLayer>& layers) {
  Eigen::Index n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  Vector flat(n);
  Eigen::Index k = 0;
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat[k++] = layer.weight(r, c);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat[k++] = layer.bias[r];
  }
  return flat;
}

Vector MlpScoreNet::parameters() const { return flatten(layers_); }

void MlpScoreNet::set_parameters(const Vector& flat) {
  if (flat.size() != parameter_count()) {
    throw DimensionError(fmt::format("MlpScoreNet: expected {} parameters, got {}",
                                     parameter_count(), flat.size()));
  }
  Eigen::Index k = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = flat[k++];
  }
}

}  // namespace pgdm::score
