#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dtwin/mlp.hpp"
#include "dtwin/policy.hpp"

using namespace dtwin;

TEST(Mlp, ForwardByHand) {
  MlpParams p;
  DenseLayer l1{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2)};
  l1.weight << 1, -1, 2, 0.5;
  l1.bias << 0, -10;
  DenseLayer l2{Eigen::MatrixXd(1, 2), Eigen::VectorXd(1)};
  l2.weight << 3, 4;
  l2.bias << 1;
  p.layers = {l1, l2};
  Eigen::MatrixXd x(2, 1);
  x << 2, 1;
  // Hidden pre-activations (1, -5.5) become (1, 0) after ReLU.
  EXPECT_DOUBLE_EQ(mlp_forward(p, x)(0, 0), 4.0);
}

TEST(Mlp, InitShapesAndFlatten) {
  Rng rng(1);
  const std::vector<std::size_t> hidden = {4, 3};
  auto p = MlpParams::init(5, hidden, 2, rng);
  EXPECT_EQ(p.parameter_count(), 5u * 4 + 4 + 4 * 3 + 3 + 3 * 2 + 2);
  EXPECT_EQ(p.input_dim(), 5u);
  EXPECT_EQ(p.output_dim(), 2u);
  const auto flat = p.flatten();
  auto q = MlpParams::zeros_like(p);
  q.assign(flat);
  EXPECT_EQ(q.flatten(), flat);
  for (double w : p.layers[0].weight.reshaped()) EXPECT_LE(std::abs(w), 1.0 / std::sqrt(5.0));
}

TEST(Mlp, BackwardMatchesFiniteDifference) {
  Rng rng(2);
  const std::vector<std::size_t> hidden = {6, 5};
  auto p = MlpParams::init(4, hidden, 3, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 7);
  Eigen::MatrixXd gout = Eigen::MatrixXd::Random(3, 7);
  auto loss = [&](const MlpParams& q) { return (mlp_forward(q, x).array() * gout.array()).sum(); };
  MlpCache cache;
  mlp_forward(p, x, &cache);
  auto g = MlpParams::zeros_like(p);
  mlp_backward(p, cache, gout, g);
  const auto gflat = g.flatten();
  for (std::size_t k = 0; k < p.parameter_count(); ++k) {
    auto hi = p, lo = p;
    hi.coefficient(k) += 1e-6;
    lo.coefficient(k) -= 1e-6;
    const double fd = (loss(hi) - loss(lo)) / 2e-6;
    EXPECT_NEAR(gflat[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Policy, AdvantageExample) { EXPECT_DOUBLE_EQ(advantage(5.0, 10.0, 9.0, 0.99), 5.0 + 9.9 - 9.0); }

TEST(Policy, LogStdClampedAndMeansInUnitInterval) {
  Rng rng(3);
  const std::vector<std::size_t> hidden = {8};
  auto a = ActorParams::init(6, 4, hidden, -1.0, rng);
  EXPECT_EQ(a.action_dim(), 4u);
  const auto out = actor_forward(Eigen::VectorXd::Random(6), a);
  for (double m : out.means) {
    EXPECT_GT(m, 0.0);
    EXPECT_LT(m, 1.0);
  }
  EXPECT_DOUBLE_EQ(out.log_std[0], -1.0);
}

TEST(Policy, MeanActionWithoutExploration) {
  PolicyOutput out;
  out.logits = Eigen::VectorXd::Constant(3, 0.4);
  out.means = out.logits.unaryExpr([](double z) { return sigmoid(z); });
  out.log_std = Eigen::VectorXd::Zero(3);
  Rng rng(1);
  const auto s = sample_action(out, rng, false);
  EXPECT_EQ(s.u, out.means);
}

TEST(Policy, SquashedLogProbOneDimension) {
  Eigen::VectorXd z(1), mu(1), ls(1);
  z << 0.3;
  mu << -0.2;
  ls << std::log(0.5);
  const double u = sigmoid(0.3);
  const double gauss = -0.5 * std::pow((0.3 + 0.2) / 0.5, 2) - std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(squashed_log_prob(z, mu, ls), gauss - std::log(u * (1 - u)), 1e-12);
}

TEST(Policy, MaskedCoordinatesIgnored) {
  Eigen::VectorXd z(2), mu(2), ls(2), active(2);
  z << 0.3, 5.0;
  mu << -0.2, 0.0;
  ls << std::log(0.5), 0.0;
  active << 1.0, 0.0;
  Eigen::VectorXd z1 = z.head(1), mu1 = mu.head(1), ls1 = ls.head(1);
  EXPECT_NEAR(squashed_log_prob(z, mu, ls, active), squashed_log_prob(z1, mu1, ls1), 1e-12);
}

TEST(Policy, SampleStatistics) {
  PolicyOutput out;
  out.logits = Eigen::VectorXd::Constant(1, 1.0);
  out.means = Eigen::VectorXd::Constant(1, sigmoid(1.0));
  out.log_std = Eigen::VectorXd::Constant(1, std::log(0.3));
  Rng rng(9);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double z = sample_action(out, rng).pre_squash[0];
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 1.0, 0.005);
  EXPECT_NEAR(std::sqrt(s2 / n - (s / n) * (s / n)), 0.3, 0.005);
}
