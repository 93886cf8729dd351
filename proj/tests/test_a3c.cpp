#include <thread>

#include <gtest/gtest.h>

#include "dtwin/a3c.hpp"

using namespace dtwin;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.net.num_devices = 3;
  cfg.net.num_small_cells = 1;
  cfg.training.hidden = {8, 8};
  cfg.training.episode_len = 10;
  cfg.training.t_max = 5;
  cfg.training.total_steps = 200;
  return cfg;
}

}  // namespace

TEST(Actor, ZeroParamsGiveHalfMeans) {
  const auto cfg = small_config();
  auto snap = initial_params(cfg, 1);
  for (auto& l : snap.actor.net.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const auto out = actor_forward(Eigen::VectorXd::Random(snap.actor.net.input_dim()), snap.actor);
  for (double m : out.means) EXPECT_EQ(m, 0.5);
}

TEST(Actor, ForwardMatchesNaiveOracle) {
  const auto cfg = small_config();
  const auto snap = initial_params(cfg, 2);
  const Eigen::VectorXd s = Eigen::VectorXd::Random(snap.actor.net.input_dim());
  std::vector<double> h(s.data(), s.data() + s.size());
  const auto& layers = snap.actor.net.layers;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> next(static_cast<std::size_t>(layers[l].weight.rows()));
    for (Eigen::Index r = 0; r < layers[l].weight.rows(); ++r) {
      double acc = layers[l].bias(r);
      for (Eigen::Index c = 0; c < layers[l].weight.cols(); ++c) acc += layers[l].weight(r, c) * h[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = (l + 1 < layers.size()) ? std::max(acc, 0.0) : acc;
    }
    h = next;
  }
  const auto out = actor_forward(s, snap.actor);
  for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(out.logits[static_cast<Eigen::Index>(k)], h[k], 1e-12 * std::max(1.0, std::abs(h[k])));
  EXPECT_EQ(actor_forward(s, snap.actor).logits, out.logits);
}

TEST(Critic, ZeroParamsGiveZero) {
  const auto cfg = small_config();
  auto c = initial_params(cfg, 1).critic;
  for (auto& l : c.net.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  EXPECT_EQ(critic_forward(Eigen::VectorXd::Random(c.net.input_dim()), c), 0.0);
}

TEST(Advantage, Examples) {
  EXPECT_DOUBLE_EQ(advantage(1.0, 10.0, 5.0, 0.99), 5.9);
  EXPECT_EQ(advantage(2.0, 10.0, 5.0, 0.0), -3.0);
  EXPECT_EQ(advantage(0.0, 4.0, 4.0, 1.0), 0.0);
}

TEST(Returns, Backward) {
  Trajectory t;
  t.steps.resize(3);
  t.steps[0].reward = 1.0;
  t.steps[1].reward = 2.0;
  t.steps[2].reward = 3.0;
  t.bootstrap_value = 10.0;
  assign_returns(t, 0.5);
  EXPECT_DOUBLE_EQ(t.steps[2].target, 3.0 + 5.0);
  EXPECT_DOUBLE_EQ(t.steps[1].target, 2.0 + 4.0);
  EXPECT_DOUBLE_EQ(t.steps[0].target, 1.0 + 3.0);
}

namespace {

Trajectory one_step(const ParamSnapshot& snap, double advantage_value) {
  Trajectory t;
  Transition tr;
  tr.state = Eigen::VectorXd::Random(snap.actor.net.input_dim());
  tr.pre_squash = Eigen::VectorXd::Random(snap.actor.action_dim());
  tr.value = critic_forward(tr.state, snap.critic);
  tr.target = tr.value + advantage_value;
  t.steps.push_back(tr);
  return t;
}

}  // namespace

TEST(Gradients, ZeroAdvantageZeroActorGradient) {
  const auto snap = initial_params(small_config(), 3);
  const auto t = one_step(snap, 0.0);
  auto acc = GradAccum::zeros_like(snap.actor, snap.critic);
  accumulate_gradients(t, snap.actor, snap.critic, {}, acc);
  EXPECT_EQ(acc.d_actor.net.squared_norm(), 0.0);
  EXPECT_EQ(acc.d_actor.log_std.squaredNorm(), 0.0);
  EXPECT_EQ(acc.step_count, 1u);
}

TEST(Gradients, MatchSurrogateFiniteDifference) {
  const auto snap = initial_params(small_config(), 4);
  auto t = one_step(snap, 0.7);
  Transition second = t.steps[0];
  second.state = Eigen::VectorXd::Random(snap.actor.net.input_dim());
  second.target = critic_forward(second.state, snap.critic) - 0.4;
  t.steps.push_back(second);
  GradientSettings gs;
  gs.entropy_coeff = 0.05;
  auto acc = GradAccum::zeros_like(snap.actor, snap.critic);
  accumulate_gradients(t, snap.actor, snap.critic, gs, acc);
  const auto ga = acc.d_actor.flatten();
  for (std::size_t k = 0; k < ga.size(); k += 7) {
    auto hi = snap.actor, lo = snap.actor;
    hi.coefficient(k) += 1e-6;
    lo.coefficient(k) -= 1e-6;
    const double fd = (actor_surrogate(t, hi, snap.critic, gs) - actor_surrogate(t, lo, snap.critic, gs)) / 2e-6;
    EXPECT_NEAR(ga[k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "actor coordinate " << k;
  }
  const auto gc = acc.d_critic.net.flatten();
  for (std::size_t k = 0; k < gc.size(); k += 5) {
    auto hi = snap.critic, lo = snap.critic;
    hi.net.coefficient(k) += 1e-6;
    lo.net.coefficient(k) -= 1e-6;
    const double fd = (critic_surrogate(t, hi) - critic_surrogate(t, lo)) / 2e-6;
    EXPECT_NEAR(gc[k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "critic coordinate " << k;
  }
}

TEST(Gradients, NonFiniteRejected) {
  const auto snap = initial_params(small_config(), 5);
  auto t = one_step(snap, 1.0);
  t.steps[0].target = std::numeric_limits<double>::quiet_NaN();
  auto acc = GradAccum::zeros_like(snap.actor, snap.critic);
  EXPECT_THROW(accumulate_gradients(t, snap.actor, snap.critic, {}, acc), std::runtime_error);
}

TEST(ApplyUpdate, ZeroGradientOrRate) {
  const auto snap = initial_params(small_config(), 6);
  auto a = snap.actor;
  auto c = snap.critic;
  apply_update(a, c, GradAccum::zeros_like(a, c), 1e-3, 1e-3);
  EXPECT_EQ(a.flatten(), snap.actor.flatten());
  auto g = GradAccum::zeros_like(a, c);
  g.d_actor.coefficient(3) = 2.0;
  apply_update(a, c, g, 0.0, 0.0);
  EXPECT_EQ(a.flatten(), snap.actor.flatten());
  EXPECT_EQ(c.net.flatten(), snap.critic.net.flatten());
}

TEST(ApplyUpdate, SingleCoordinateSigns) {
  const auto snap = initial_params(small_config(), 7);
  auto a = snap.actor;
  auto c = snap.critic;
  auto g = GradAccum::zeros_like(a, c);
  g.d_actor.coefficient(3) = 2.0;
  g.d_critic.net.coefficient(4) = 3.0;
  apply_update(a, c, g, 0.1, 0.01);
  EXPECT_DOUBLE_EQ(a.coefficient(3), snap.actor.flatten()[3] + 0.2);
  EXPECT_DOUBLE_EQ(c.net.coefficient(4), snap.critic.net.flatten()[4] - 0.03);
}

TEST(ApplyUpdate, ClipAndLogStdClamp) {
  const auto snap = initial_params(small_config(), 8);
  auto a = snap.actor;
  auto c = snap.critic;
  auto g = GradAccum::zeros_like(a, c);
  g.d_actor.log_std.setConstant(100.0);
  apply_update(a, c, g, 1.0, 1.0, 0.0);
  EXPECT_EQ(a.log_std.maxCoeff(), kLogStdMax);
  a = snap.actor;
  g = GradAccum::zeros_like(a, c);
  g.d_actor.coefficient(0) = 400.0;
  apply_update(a, c, g, 1.0, 1.0, 40.0);
  EXPECT_NEAR(a.coefficient(0) - snap.actor.flatten()[0], 40.0, 1e-12);
}

TEST(GlobalAgent, NoUpdatesLeavesParams) {
  const auto cfg = small_config();
  const auto snap = initial_params(cfg, 9);
  GlobalAgent g(snap.actor, snap.critic, cfg.training);
  g.close();
  g.run();
  EXPECT_EQ(g.updates_applied(), 0u);
  EXPECT_EQ(g.actor().flatten(), snap.actor.flatten());
}

TEST(GlobalAgent, SerializedUpdates) {
  const auto cfg = small_config();
  const auto snap = initial_params(cfg, 10);
  auto u1 = GradAccum::zeros_like(snap.actor, snap.critic);
  auto u2 = GradAccum::zeros_like(snap.actor, snap.critic);
  u1.d_actor.coefficient(1) = 0.5;
  u1.d_critic.net.coefficient(2) = -1.0;
  u2.d_actor.coefficient(1) = -0.25;
  u2.d_actor.coefficient(9) = 3.0;

  auto a = snap.actor;
  auto c = snap.critic;
  const auto& t = cfg.training;
  apply_update(a, c, u1, t.lr_actor, t.lr_critic, t.grad_clip);
  apply_update(a, c, u2, t.lr_actor, t.lr_critic, t.grad_clip);

  GlobalAgent g(snap.actor, snap.critic, t);
  std::thread th([&] { g.run(); });
  g.submit(u1);
  g.submit(u2);
  const auto s = g.request_snapshot();
  g.close();
  th.join();
  EXPECT_EQ(s.version, 2u);
  EXPECT_EQ(s.actor.flatten(), a.flatten());
  EXPECT_EQ(g.critic().net.flatten(), c.net.flatten());
}

TEST(Training, OneStepBudgetOneUpdate) {
  auto cfg = small_config();
  cfg.training.total_steps = 1;
  cfg.training.workers = 1;
  EXPECT_EQ(train_async(cfg, 1).updates_applied, 1u);
  EXPECT_EQ(train_sync(cfg, 1).updates_applied, 1u);
}

TEST(Training, AsyncSingleWorkerMatchesSync) {
  auto cfg = small_config();
  cfg.training.workers = 1;
  const auto a = train_async(cfg, 11);
  const auto s = train_sync(cfg, 11);
  EXPECT_EQ(a.updates_applied, s.updates_applied);
  EXPECT_EQ(a.actor.flatten(), s.actor.flatten());
  EXPECT_EQ(a.critic.net.flatten(), s.critic.net.flatten());
  ASSERT_EQ(a.episodes.size(), s.episodes.size());
  for (std::size_t k = 0; k < a.episodes.size(); ++k) EXPECT_EQ(a.episodes[k].cost, s.episodes[k].cost);
}

TEST(Training, TMaxOneIsOneStepActorCritic) {
  auto cfg = small_config();
  cfg.training.t_max = 1;
  cfg.training.total_steps = 30;
  const auto s = train_sync(cfg, 3);
  EXPECT_EQ(s.updates_applied, 31u);
}

TEST(Training, MultipleWorkersRun) {
  auto cfg = small_config();
  cfg.training.workers = 3;
  cfg.training.total_steps = 300;
  const auto out = train_async(cfg, 12);
  EXPECT_GE(out.updates_applied, 300u / cfg.training.t_max);
  EXPECT_TRUE(out.actor.net.all_finite());
}

TEST(Worker, DistinctStreams) {
  const auto cfg = small_config();
  const auto snap = initial_params(cfg, 13);
  Worker w0(cfg, 13, 0), w1(cfg, 13, 1);
  std::vector<EpisodeRecord> eps;
  const auto t0 = w0.rollout(snap, eps);
  const auto t1 = w1.rollout(snap, eps);
  EXPECT_NE(t0.steps[0].pre_squash, t1.steps[0].pre_squash);
  EXPECT_EQ(t0.steps.size(), cfg.training.t_max);
}

TEST(Seeds, Derived) {
  EXPECT_NE(derive_seed(1, 0, 1), derive_seed(1, 1, 1));
  EXPECT_NE(derive_seed(1, 0, 1), derive_seed(1, 0, 2));
  EXPECT_EQ(derive_seed(5, 3, 2), derive_seed(5, 3, 2));
}
