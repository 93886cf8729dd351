#include "dtwin/a3c.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "dtwin/schemes.hpp"

namespace dtwin {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt) {
  // splitmix64 finalizer over a combination of the three inputs
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xD1B54A32D192ED03ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double effective_reward_scale(const SimConfig& cfg) {
  if (cfg.training.reward_scale > 0.0) return cfg.training.reward_scale;
  const double lam = cfg.arrivals.mean_bits;
  const double horizon = 1.0 / std::max(1.0 - cfg.training.discount, 1e-2);
  return std::max(1.0, static_cast<double>(cfg.net.num_devices) * 10.0 * lam * lam * horizon);
}

void assign_returns(Trajectory& traj, double discount) {
  double ret = traj.bootstrap_value;
  for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
    ret = it->reward + discount * ret;
    it->target = ret;
  }
}

GradAccum GradAccum::zeros_like(const ActorParams& a, const CriticParams& c) {
  GradAccum g;
  g.d_actor = ActorParams::zeros_like(a);
  g.d_critic = CriticParams::zeros_like(c);
  return g;
}

namespace {

Eigen::MatrixXd stack_states(const Trajectory& traj) {
  if (traj.steps.empty()) throw std::invalid_argument("empty trajectory");
  const auto dim = traj.steps.front().state.size();
  Eigen::MatrixXd s(dim, static_cast<Eigen::Index>(traj.steps.size()));
  for (std::size_t t = 0; t < traj.steps.size(); ++t) s.col(static_cast<Eigen::Index>(t)) = traj.steps[t].state;
  return s;
}

bool is_active(const Eigen::VectorXd& active, Eigen::Index k) { return active.size() == 0 || active(k) != 0.0; }

const Eigen::VectorXd& step_mask(const Transition& tr, const GradientSettings& gs) {
  return tr.active.size() > 0 ? tr.active : gs.active;
}

double entropy_per_step(const Eigen::VectorXd& log_std, const Eigen::VectorXd& active) {
  const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (Eigen::Index k = 0; k < log_std.size(); ++k)
    if (is_active(active, k)) h += log_std(k) + c;
  return h;
}

}  // namespace

double actor_surrogate(const Trajectory& traj, const ActorParams& actor, const CriticParams& critic,
                       const GradientSettings& gs) {
  const auto s = stack_states(traj);
  const Eigen::MatrixXd v = mlp_forward(critic.net, s);
  const Eigen::MatrixXd logits = mlp_forward(actor.net, s);
  double j = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    const double adv = traj.steps[t].target - v(0, ti);
    const Eigen::VectorXd mu = logits.col(ti);
    const auto& mask = step_mask(traj.steps[t], gs);
    j += adv * squashed_log_prob(traj.steps[t].pre_squash, mu, actor.log_std, mask);
    j += gs.entropy_coeff * entropy_per_step(actor.log_std, mask);
  }
  return j;
}

double critic_surrogate(const Trajectory& traj, const CriticParams& critic) {
  const Eigen::MatrixXd v = mlp_forward(critic.net, stack_states(traj));
  double l = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const double a = traj.steps[t].target - v(0, static_cast<Eigen::Index>(t));
    l += a * a;
  }
  return l;
}

void accumulate_gradients(const Trajectory& traj, const ActorParams& actor,
                          const CriticParams& critic, const GradientSettings& gs, GradAccum& acc) {
  const auto s = stack_states(traj);
  const auto steps = static_cast<Eigen::Index>(traj.steps.size());

  MlpCache critic_cache;
  const Eigen::MatrixXd v = mlp_forward(critic.net, s, &critic_cache);
  Eigen::VectorXd adv(steps);
  for (Eigen::Index t = 0; t < steps; ++t) adv(t) = traj.steps[static_cast<std::size_t>(t)].target - v(0, t);
  const Eigen::MatrixXd critic_out = -2.0 * adv.transpose();
  mlp_backward(critic.net, critic_cache, critic_out, acc.d_critic.net);

  MlpCache actor_cache;
  const Eigen::MatrixXd logits = mlp_forward(actor.net, s, &actor_cache);
  const Eigen::Index dims = logits.rows();
  const Eigen::VectorXd inv_sd = (-actor.log_std.array()).exp();
  Eigen::MatrixXd g_logits = Eigen::MatrixXd::Zero(dims, steps);
  Eigen::VectorXd g_log_std = Eigen::VectorXd::Zero(dims);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const auto& z = traj.steps[static_cast<std::size_t>(t)].pre_squash;
    const auto& mask = step_mask(traj.steps[static_cast<std::size_t>(t)], gs);
    for (Eigen::Index k = 0; k < dims; ++k) {
      if (!is_active(mask, k)) continue;
      const double e = (z(k) - logits(k, t)) * inv_sd(k);
      g_logits(k, t) = adv(t) * e * inv_sd(k);
      g_log_std(k) += adv(t) * (e * e - 1.0) + gs.entropy_coeff;
    }
  }
  mlp_backward(actor.net, actor_cache, g_logits, acc.d_actor.net);
  acc.d_actor.log_std += g_log_std;
  acc.step_count += traj.steps.size();

  if (!acc.d_actor.net.all_finite() || !acc.d_actor.log_std.allFinite() || !acc.d_critic.net.all_finite())
    throw std::runtime_error("non-finite gradient: max |advantage| = " +
                             std::to_string(adv.cwiseAbs().maxCoeff()) + " over " +
                             std::to_string(steps) + " steps");
}

void apply_update(ActorParams& actor, CriticParams& critic, const GradAccum& g, double lr_actor,
                  double lr_critic, double grad_clip) {
  if (!actor.net.same_shape(g.d_actor.net) || actor.log_std.size() != g.d_actor.log_std.size() ||
      !critic.net.same_shape(g.d_critic.net))
    throw std::invalid_argument("gradient shape does not match the parameters");
  double actor_scale = 1.0, critic_scale = 1.0;
  if (grad_clip > 0.0) {
    const double an = std::sqrt(g.d_actor.net.squared_norm() + g.d_actor.log_std.squaredNorm());
    const double cn = std::sqrt(g.d_critic.net.squared_norm());
    if (an > grad_clip) actor_scale = grad_clip / an;
    if (cn > grad_clip) critic_scale = grad_clip / cn;
  }
  actor.net.axpy(lr_actor * actor_scale, g.d_actor.net);
  actor.log_std += (lr_actor * actor_scale) * g.d_actor.log_std;
  actor.log_std = actor.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  critic.net.axpy(-lr_critic * critic_scale, g.d_critic.net);
}

// ---- global agent -------------------------------------------------------------

GlobalAgent::GlobalAgent(ActorParams actor, CriticParams critic, const TrainingConfig& cfg)
    : cfg_(cfg), actor_(std::move(actor)), critic_(std::move(critic)) {}

void GlobalAgent::submit(GradAccum g) {
  {
    std::lock_guard lk(mu_);
    queue_.emplace_back(std::move(g));
  }
  cv_.notify_one();
}

ParamSnapshot GlobalAgent::request_snapshot() {
  std::promise<ParamSnapshot> p;
  auto fut = p.get_future();
  {
    std::lock_guard lk(mu_);
    queue_.emplace_back(std::move(p));
  }
  cv_.notify_one();
  return fut.get();
}

void GlobalAgent::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

void GlobalAgent::run() {
  for (;;) {
    Message msg;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return closed_ || !queue_.empty(); });
      if (queue_.empty()) return;
      msg = std::move(queue_.front());
      queue_.pop_front();
    }
    if (auto* g = std::get_if<GradAccum>(&msg)) {
      if (stopped_) continue;
      apply_update(actor_, critic_, *g, cfg_.lr_actor, cfg_.lr_critic, cfg_.grad_clip);
      ++applied_;
      applied_from_.push_back(g->worker);
      if (finished()) stopped_ = true;
    } else {
      std::get<std::promise<ParamSnapshot>>(msg).set_value({actor_, critic_, applied_});
    }
  }
}

// ---- worker -------------------------------------------------------------------

Worker::Worker(const SimConfig& cfg, std::uint64_t seed, std::size_t id)
    : cfg_(cfg), id_(id), env_(cfg, derive_seed(seed, id, 1)), rng_(derive_seed(seed, id, 2)) {
  settings_.entropy_coeff = cfg.training.entropy_coeff;
  if (cfg.scheme != Scheme::joint) settings_.active = active_dims(cfg.scheme, env_.action_layout());
  obs_ = env_.features();
}

Trajectory Worker::rollout(const ParamSnapshot& snap, std::vector<EpisodeRecord>& episodes,
                           const SlotSink& sink) {
  Trajectory traj;
  const double scale = effective_reward_scale(cfg_);
  Eigen::VectorXd tail;
  for (std::size_t t = 0; t < cfg_.training.t_max; ++t) {
    Eigen::VectorXd mask = relevant_mask(env_.topology());
    if (settings_.active.size() > 0) mask = mask.cwiseProduct(settings_.active);
    const auto out = actor_forward(obs_, snap.actor);
    const auto s = sample_action(out, rng_, true, mask);
    std::vector<double> u(s.u.data(), s.u.data() + s.u.size());
    apply_scheme_mask(cfg_.scheme, u, env_.topology());
    const auto res = env_.step(env_.project(u));
    if (sink) sink(id_, res.metrics);

    Transition tr;
    tr.state = obs_;
    tr.pre_squash = s.pre_squash;
    tr.log_prob = s.log_prob;
    tr.active = std::move(mask);
    tr.reward = res.reward / scale;
    traj.steps.push_back(std::move(tr));

    ep_reward_ += res.reward;
    ep_energy_ += res.metrics.e_total;
    ep_bits_ += res.metrics.local_bits + res.metrics.offload_bits;
    ep_backlog_ += res.metrics.backlog_local + res.metrics.backlog_edge;
    ++ep_slots_;

    obs_ = env_.normalizer().features(res.next_state);
    if (res.episode_done) {
      EpisodeRecord rec;
      rec.worker = id_;
      rec.episode = env_.episode();
      rec.cost = -ep_reward_;
      rec.ee = ep_bits_ > 0.0 ? ep_energy_ / ep_bits_ : 0.0;
      rec.mean_backlog = ep_backlog_ / static_cast<double>(ep_slots_);
      episodes.push_back(rec);
      ep_reward_ = ep_energy_ = ep_bits_ = ep_backlog_ = 0.0;
      ep_slots_ = 0;
      tail = obs_;
      env_.reset();
      obs_ = env_.features();
      break;
    }
  }
  if (tail.size() == 0) tail = obs_;

  Eigen::MatrixXd states(tail.size(), static_cast<Eigen::Index>(traj.steps.size() + 1));
  for (std::size_t t = 0; t < traj.steps.size(); ++t) states.col(static_cast<Eigen::Index>(t)) = traj.steps[t].state;
  states.col(states.cols() - 1) = tail;
  const Eigen::MatrixXd v = mlp_forward(snap.critic.net, states);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) traj.steps[t].value = v(0, static_cast<Eigen::Index>(t));
  traj.bootstrap_value = v(0, v.cols() - 1);
  return traj;
}

void worker_loop(Worker& worker, GlobalAgent& global, const TrainingConfig& cfg,
                 std::vector<EpisodeRecord>& episodes, const SlotSink& sink) {
  while (!global.finished()) {
    const auto snap = global.request_snapshot();
    auto traj = worker.rollout(snap, episodes, sink);
    global.add_steps(traj.steps.size());
    assign_returns(traj, cfg.discount);
    auto acc = GradAccum::zeros_like(snap.actor, snap.critic);
    acc.worker = worker.id();
    accumulate_gradients(traj, snap.actor, snap.critic, worker.settings(), acc);
    global.submit(std::move(acc));
  }
}

ParamSnapshot initial_params(const SimConfig& cfg, std::uint64_t seed) {
  const auto n = cfg.net.num_devices;
  const auto m1 = cfg.net.num_small_cells + 1;
  Rng rng(derive_seed(seed, 0, 0xA11));
  ParamSnapshot p;
  p.actor = ActorParams::init(StateVector::dimension(n, m1), ActionLayout{n, m1}.size(),
                              cfg.training.hidden, cfg.training.init_log_std, rng);
  p.critic = CriticParams::init(StateVector::dimension(n, m1), cfg.training.hidden, rng);
  return p;
}

TrainOutcome train_async(const SimConfig& cfg, std::uint64_t seed, const SlotSink& sink) {
  const auto k = std::max<std::size_t>(1, cfg.training.workers);
  auto init = initial_params(cfg, seed);
  GlobalAgent global(std::move(init.actor), std::move(init.critic), cfg.training);

  std::mutex sink_mu;
  SlotSink guarded;
  if (sink) guarded = [&](std::size_t w, const SlotMetrics& m) {
    std::lock_guard lk(sink_mu);
    sink(w, m);
  };

  std::vector<Worker> workers;
  workers.reserve(k);
  for (std::size_t w = 0; w < k; ++w) workers.emplace_back(cfg, seed, w);
  std::vector<std::vector<EpisodeRecord>> per_worker(k);
  std::vector<std::exception_ptr> errors(k);

  std::thread global_thread([&] { global.run(); });
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < k; ++w)
    threads.emplace_back([&, w] {
      try {
        worker_loop(workers[w], global, cfg.training, per_worker[w], guarded);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  global.close();
  global_thread.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  TrainOutcome out;
  out.actor = global.actor();
  out.critic = global.critic();
  for (auto& v : per_worker) out.episodes.insert(out.episodes.end(), v.begin(), v.end());
  out.updates_applied = global.updates_applied();
  out.steps = global.steps();
  return out;
}

TrainOutcome train_sync(const SimConfig& cfg, std::uint64_t seed, const SlotSink& sink) {
  auto p = initial_params(cfg, seed);
  Worker worker(cfg, seed, 0);
  TrainOutcome out;
  std::uint64_t steps = 0;
  while (steps <= cfg.training.total_steps) {
    ParamSnapshot snap{p.actor, p.critic, out.updates_applied};
    auto traj = worker.rollout(snap, out.episodes, sink);
    steps += traj.steps.size();
    assign_returns(traj, cfg.training.discount);
    auto acc = GradAccum::zeros_like(snap.actor, snap.critic);
    accumulate_gradients(traj, snap.actor, snap.critic, worker.settings(), acc);
    apply_update(p.actor, p.critic, acc, cfg.training.lr_actor, cfg.training.lr_critic, cfg.training.grad_clip);
    ++out.updates_applied;
  }
  out.actor = std::move(p.actor);
  out.critic = std::move(p.critic);
  out.steps = steps;
  return out;
}

}  // namespace dtwin
