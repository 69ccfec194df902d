#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "roomloc/errors.hpp"
#include "roomloc/mlp.hpp"

using namespace roomloc;
using namespace roomloc::nn;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, 1.0);
  return m;
}

// Perturbs every parameter slightly so ReLU kinks and unit gammas are not special.
MlpParams random_params(const MlpShape& shape, Rng& rng) {
  auto p = MlpParams::init(shape, rng);
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta(i) += rng.normal(0.0, 0.1);
  for (int l = 0; l < shape.hidden_layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    for (Eigen::Index j = 0; j < p.running_mean[li].size(); ++j) {
      p.running_mean[li](j) = rng.normal(0.0, 0.5);
      p.running_var[li](j) = rng.uniform(0.5, 2.0);
    }
  }
  return p;
}

}  // namespace

TEST_CASE("shape and parameter layout") {
  const MlpShape shape{7, 20, 3, 5};
  Rng rng(1);
  const auto p = MlpParams::init(shape, rng);
  CHECK(p.layer_count() == 4);
  CHECK(p.in_dim(0) == 7);
  CHECK(p.out_dim(0) == 20);
  CHECK(p.in_dim(3) == 20);
  CHECK(p.out_dim(3) == 5);
  const Eigen::Index expected = (7 * 20 + 20 * 3) + 2 * (20 * 20 + 20 * 3) + (20 * 5 + 5);
  CHECK(p.theta.size() == expected);
  for (int l = 0; l < 3; ++l) {
    CHECK(p.gamma(l).isOnes());
    CHECK(p.beta(l).isZero());
    CHECK(p.bias(l).isZero());
    CHECK((p.running_var[static_cast<std::size_t>(l)].array() > 0.0).all());
  }
  CHECK(p.theta.allFinite());
}

TEST_CASE("zero weights produce zero emissions") {
  MlpParams p(MlpShape{4, 20, 3, 3});
  p.theta.setZero();
  Rng rng(2);
  const auto x = random_matrix(6, 4, rng);
  CHECK(forward(p, x, Mode::kTrain).isZero());
  CHECK(forward_eval(p, x).isZero());
}

TEST_CASE("EVAL is repeatable and leaves running statistics alone") {
  Rng rng(3);
  auto p = random_params(MlpShape{5, 20, 3, 4}, rng);
  const auto x = random_matrix(8, 5, rng);
  const auto before = p.running_mean;
  const auto a = forward(p, x, Mode::kEval);
  const auto b = forward(p, x, Mode::kEval);
  CHECK(a == b);
  CHECK(a.allFinite());
  for (std::size_t l = 0; l < before.size(); ++l) CHECK(p.running_mean[l] == before[l]);
  Rng again(3);
  auto q = random_params(MlpShape{5, 20, 3, 4}, again);
  CHECK(forward_eval(q, random_matrix(8, 5, again)) == a);
}

TEST_CASE("TRAIN updates running statistics with momentum") {
  Rng rng(4);
  MlpParams p = MlpParams::init(MlpShape{3, 20, 1, 2}, rng);
  p.theta.setZero();
  // Identity-ish first layer: only unit 0 sees feature 0.
  p.weight(0)(0, 0) = 1.0;
  Eigen::MatrixXd x(2, 3);
  x << 1.0, 0.0, 0.0, 3.0, 0.0, 0.0;
  forward(p, x, Mode::kTrain);
  CHECK(p.running_mean[0](0) == doctest::Approx(0.1 * 2.0));
  // Unbiased batch variance of {1, 3} is 2.
  CHECK(p.running_var[0](0) == doctest::Approx(0.9 + 0.1 * 2.0));
}

TEST_CASE("invalid forward inputs") {
  Rng rng(5);
  auto p = MlpParams::init(MlpShape{3, 20, 3, 2}, rng);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd(0, 3), Mode::kEval), std::invalid_argument);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Zero(2, 4), Mode::kEval), std::invalid_argument);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Zero(1, 3), Mode::kTrain), std::invalid_argument);
  CHECK_NOTHROW(forward(p, Eigen::MatrixXd::Zero(1, 3), Mode::kEval));
}

TEST_CASE("backward matches central differences") {
  constexpr double kStep = 1e-5;
  constexpr double kRelTol = 1e-4;
  // Hidden biases have exactly zero gradient under batch statistics; central
  // differences leave ~1e-10 of rounding noise there, hence the floor.
  constexpr double kFloor = 1e-5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const MlpShape shape{4, 20, 3, 3};
    auto p = random_params(shape, rng);
    const auto x = random_matrix(3, 4, rng);
    const auto g = random_matrix(3, 3, rng);
    for (Mode mode : {Mode::kTrain, Mode::kEval}) {
      MlpParams work = p;
      ForwardCache cache;
      forward(work, x, mode, &cache);
      const auto analytic = backward(p, cache, g);
      auto loss = [&](const Eigen::VectorXd& theta) {
        MlpParams q = p;
        q.theta = theta;
        return (forward(q, x, mode).array() * g.array()).sum();
      };
      const auto numeric = oracle::numeric_gradient(loss, p.theta, kStep);
      CHECK(oracle::max_relative_error(analytic, numeric, kFloor) < kRelTol);
    }
  }
}

TEST_CASE("backward is linear in the upstream gradient") {
  Rng rng(6);
  auto p = random_params(MlpShape{4, 20, 3, 3}, rng);
  const auto x = random_matrix(5, 4, rng);
  ForwardCache cache;
  MlpParams work = p;
  forward(work, x, Mode::kTrain, &cache);
  CHECK(backward(p, cache, Eigen::MatrixXd::Zero(5, 3)).isZero());
  const auto g = random_matrix(5, 3, rng);
  const auto one = backward(p, cache, g);
  const auto two = backward(p, cache, 2.0 * g);
  CHECK((two - 2.0 * one).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + one.cwiseAbs().maxCoeff()));
  CHECK_THROWS_AS(backward(p, cache, Eigen::MatrixXd::Zero(4, 3)), std::invalid_argument);
}

TEST_CASE("adam with a zero gradient only counts the step") {
  Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  const Eigen::VectorXd keep = theta;
  AdamState s(5);
  adam_step(theta, Eigen::VectorXd::Zero(5), s);
  CHECK(theta == keep);
  CHECK(s.step == 1);
}

TEST_CASE("first adam step matches the bias-corrected formula") {
  Eigen::VectorXd theta(3);
  theta << 0.5, -0.25, 2.0;
  Eigen::VectorXd g(3);
  g << 0.3, -4.0, 1e-9;
  AdamState s(3, 0.01);
  const Eigen::VectorXd start = theta;
  adam_step(theta, g, s);
  for (int i = 0; i < 3; ++i) {
    // m_hat = g, v_hat = g^2 after one step.
    const double expected = start(i) - 0.01 * g(i) / (std::abs(g(i)) + 1e-8);
    CHECK(theta(i) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("constant gradient drives adam steps to the learning rate") {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 0.7, -30.0;
  AdamState s(2, 1e-2);
  Eigen::VectorXd prev = theta;
  for (int i = 0; i < 1000; ++i) {
    prev = theta;
    adam_step(theta, g, s);
  }
  const Eigen::VectorXd delta = (theta - prev).cwiseAbs();
  CHECK(s.step == 1000);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(delta(i) - 1e-2) <= 0.1 * 1e-2);
}

TEST_CASE("adam rejects non-finite gradients and size mismatch") {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  AdamState s(2);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(adam_step(theta, bad, s), TrainingDiverged);
  CHECK_THROWS_AS(adam_step(theta, Eigen::VectorXd::Zero(3), s), std::invalid_argument);
}

TEST_CASE("EVAL approaches TRAIN as running statistics settle") {
  Rng rng(7);
  auto p = MlpParams::init(MlpShape{3, 20, 3, 2}, rng);
  const auto x = random_matrix(64, 3, rng);
  std::vector<double> gaps;
  for (int epoch = 0; epoch < 60; ++epoch) {
    const auto train_out = forward(p, x, Mode::kTrain);
    gaps.push_back((forward_eval(p, x) - train_out).cwiseAbs().mean());
  }
  CHECK(gaps.back() < gaps.front());
  CHECK(gaps.back() < 0.05 * gaps.front() + 1e-3);
}
