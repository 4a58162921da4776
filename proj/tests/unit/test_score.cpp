#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "../support/oracles.hpp"
#include "pgdm/errors.hpp"
#include "pgdm/score.hpp"

using namespace pgdm;
using namespace pgdm::score;

TEST_CASE("standard normal log density at the mode") {
  const auto g = GaussianMixture::isotropic(Vector::Zero(1), 1.0);
  CHECK(gmm_log_density(g, Vector::Zero(1), 0.0) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(gmm_log_density(g, Vector::Zero(1), 1.0) ==
        doctest::Approx(-0.5 * std::log(4 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("two-component mixture log density matches high-precision evaluations") {
  // Both references evaluated to 40 digits with an arbitrary-precision calculator.
  const GaussianMixture one_d({0.3, 0.7}, {Vector{{-1.0}}, Vector{{2.0}}}, {Vector{{0.5}}, Vector{{1.5}}});
  CHECK(gmm_log_density(one_d, Vector{{0.25}}, 0.5) ==
        doctest::Approx(-1.989491074817171054013662310846055242801).epsilon(1e-13));
  const GaussianMixture two_d({0.6, 0.4}, {Vector{{0.0, 1.0}}, Vector{{2.0, -1.0}}},
                              {Vector{{1.0, 0.5}}, Vector{{0.25, 2.0}}});
  CHECK(gmm_log_density(two_d, Vector{{0.5, 0.5}}, 0.3) ==
        doctest::Approx(-2.435930415979257200515563622325023586238).epsilon(1e-13));
}

TEST_CASE("single Gaussian score is the closed form") {
  const auto std_normal = GaussianMixture::isotropic(Vector::Zero(1), 1.0);
  for (double x : {-2.0, 0.0, 0.3, 5.0}) {
    CHECK(gmm_score(std_normal, Vector{{x}}, 0.0)[0] == doctest::Approx(-x).epsilon(1e-15));
  }
  const Vector m{{1.0, -2.0}};
  const auto g = GaussianMixture::isotropic(m, 0.7);
  const Vector x{{0.3, 0.4}};
  for (double sigma : {0.0, 0.2, 3.0}) {
    const Vector expected = -(x - m) / (0.7 + sigma * sigma);
    CHECK((gmm_score(g, x, sigma) - expected).norm() <= 1e-14);
  }
}

TEST_CASE("mixture score matches central differences of the log density") {
  const auto r = oracle::check_gmm_score_fd();
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("far-tail evaluation stays finite") {
  const GaussianMixture g({0.5, 0.5}, {Vector{{-1.0}}, Vector{{1.0}}}, {Vector{{0.01}}, Vector{{0.01}}});
  const Vector s = gmm_score(g, Vector{{200.0}}, 0.0);
  CHECK(std::isfinite(s[0]));
  CHECK(s[0] == doctest::Approx(-199.0 / 0.01));
}

TEST_CASE("invalid mixtures are rejected") {
  CHECK_THROWS_AS(GaussianMixture({0.5, 0.6}, {Vector::Zero(1), Vector::Zero(1)},
                                  {Vector::Ones(1), Vector::Ones(1)}),
                  ConfigError);
  CHECK_THROWS_AS(GaussianMixture({1.0}, {Vector::Zero(1)}, {Vector::Zero(1)}), ConfigError);
  CHECK_THROWS_AS(GaussianMixture({1.0}, {Vector::Zero(2)}, {Vector::Ones(3)}), DimensionError);
  const auto g = GaussianMixture::isotropic(Vector::Zero(2), 1.0);
  CHECK_THROWS_AS(gmm_score(g, Vector::Zero(3), 0.0), DimensionError);
}

TEST_CASE("zero-initialised network outputs zero and is deterministic") {
  MlpScoreNet net(3, {8, 8}, Activation::softplus, SigmaConditioning::input_and_scale);
  const Vector x{{0.1, -0.4, 2.0}};
  CHECK(net.forward(x, 0.5).norm() == 0.0);
  RngStream rng(5, 0);
  net.init_random(rng);
  const Vector a = net.forward(x, 0.5);
  CHECK(a.norm() > 0.0);
  CHECK(net.forward(x, 0.5) == a);
}

TEST_CASE("one linear layer computes W x + b") {
  DenseLayer layer{Matrix{{1.0, 2.0, -1.0}, {0.5, 0.0, 3.0}}, Vector{{0.25, -1.0}}};
  // Data dimension equals output dimension, so use a square layer.
  DenseLayer square{Matrix{{1.0, 2.0}, {-0.5, 3.0}}, Vector{{0.25, -1.0}}};
  const MlpScoreNet net({square}, Activation::tanh, SigmaConditioning::none);
  const Vector x{{0.7, -1.3}};
  const Vector expected = square.weight * x + square.bias;
  CHECK((net.forward(x, 1.0) - expected).norm() <= 1e-15);
  CHECK_THROWS_AS(MlpScoreNet({layer}, Activation::tanh, SigmaConditioning::none), DimensionError);
}

TEST_CASE("backprop matches central finite differences") {
  const auto r = oracle::check_mlp_backprop_fd();
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("backprop special cases") {
  MlpScoreNet net(2, {4}, Activation::tanh, SigmaConditioning::input_and_scale);
  RngStream rng(9, 0);
  net.init_random(rng);
  const auto zero = net.backward(Vector{{0.3, 0.2}}, 0.5, Vector::Zero(2));
  CHECK(MlpScoreNet::flatten(zero).norm() == 0.0);

  DenseLayer square{Matrix{{1.0, 2.0}, {-0.5, 3.0}}, Vector{{0.0, 0.0}}};
  const MlpScoreNet linear({square}, Activation::tanh, SigmaConditioning::none);
  const Vector x{{0.7, -1.3}}, up{{2.0, -1.0}};
  const auto g = linear.backward(x, 1.0, up);
  CHECK((g[0].weight - up * x.transpose()).norm() <= 1e-15);
  CHECK((g[0].bias - up).norm() <= 1e-15);
}

TEST_CASE("denoising optimum of a single repeated point points back to it") {
  const Vector star{{0.5, -0.5}};
  std::vector<Vector> data(256, star);
  MlpScoreNet net(2, {32, 32}, Activation::softplus, SigmaConditioning::input_and_scale);
  RngStream rng(3, 0);
  net.init_random(rng);
  const auto sched = make_geometric_schedule(0.1, 1.0, 5);
  DsmConfig cfg;
  cfg.epochs = 150;
  cfg.seed = 4;
  const auto res = dsm_train(std::move(net), data, sched, cfg);
  for (const auto& off : {Vector{{0.3, 0.0}}, Vector{{0.0, -0.3}}, Vector{{-0.2, 0.2}}}) {
    const Vector s = res.net.forward(star + off, 0.3);
    CHECK(s.dot(-off) > 0.0);
  }
}

TEST_CASE("training on a 2-D Gaussian recovers the analytic score direction") {
  const Vector mean{{1.0, -1.0}};
  const auto law = GaussianMixture::isotropic(mean, 1.0);
  RngStream data_rng(21, 0);
  std::vector<Vector> data;
  for (int k = 0; k < 2000; ++k) data.push_back(law.sample(data_rng));
  const auto sched = make_geometric_schedule(0.01, 3.0, 10);
  MlpScoreNet net(2, {64, 64}, Activation::softplus, SigmaConditioning::input_and_scale);
  RngStream init(22, 0);
  net.init_random(init);
  DsmConfig cfg;
  cfg.seed = 23;
  const auto res = dsm_train(std::move(net), data, sched, cfg);

  for (double l : res.train_loss) REQUIRE(std::isfinite(l));
  CHECK(res.heldout_loss.back() < res.initial_heldout_loss);

  const double sigma = sched.sigma((sched.levels() + 1) / 2);
  double cos_sum = 0.0;
  for (int a = 0; a < 20; ++a) {
    for (int b = 0; b < 20; ++b) {
      const Vector x = mean + Vector{{-2.0 + 4.0 * a / 19.0, -2.0 + 4.0 * b / 19.0}};
      const Vector s_true = gmm_score(law, x, sigma);
      const Vector s_net = res.net.forward(x, sigma);
      cos_sum += s_true.dot(s_net) / (s_true.norm() * s_net.norm());
    }
  }
  INFO("mean cosine " << cos_sum / 400.0);
  CHECK(cos_sum / 400.0 >= 0.95);
}

TEST_CASE("checkpoints round-trip bit for bit") {
  MlpScoreNet net(3, {6, 5}, Activation::tanh, SigmaConditioning::input_and_scale);
  RngStream rng(31, 0);
  net.init_random(rng);
  const auto path = std::filesystem::temp_directory_path() / "pgdm_test_checkpoint.json";
  save_checkpoint(net, path.string());
  const auto back = load_checkpoint(path.string());
  CHECK(back.parameters() == net.parameters());
  CHECK(back.activation() == net.activation());
  CHECK(back.widths() == net.widths());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
}
