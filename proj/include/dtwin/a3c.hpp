#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/config.hpp"
#include "dtwin/env.hpp"
#include "dtwin/policy.hpp"

namespace dtwin {

struct Transition {
  Eigen::VectorXd state;       // normalized features
  Eigen::VectorXd pre_squash;  // sampled z
  double log_prob = 0.0;
  double reward = 0.0;         // learner-scale reward
  double value = 0.0;          // critic estimate at acting time
  double target = 0.0;         // n-step bootstrapped return
  Eigen::VectorXd active;      // coordinates counted in log pi; empty: GradientSettings::active
};

/// Contiguous slots collected against one parameter snapshot.
struct Trajectory {
  std::vector<Transition> steps;
  double bootstrap_value = 0.0;  // v(s) after the last step
};

/// Fills each step's target with the discounted return bootstrapped from the tail value.
void assign_returns(Trajectory& traj, double discount);

struct GradAccum {
  ActorParams d_actor;    // gradient of the policy objective (ascent direction)
  CriticParams d_critic;  // gradient of the squared-advantage loss (descent direction)
  std::size_t step_count = 0;
  std::size_t worker = 0;

  static GradAccum zeros_like(const ActorParams& a, const CriticParams& c);
};

struct GradientSettings {
  double entropy_coeff = 0.0;
  Eigen::VectorXd active;  // fallback mask; empty: every action coordinate is learned
};

/// sum_t [log pi(a_t|s_t) A_t + entropy_coeff * H] with A_t = target_t - v(s_t) held fixed.
double actor_surrogate(const Trajectory& traj, const ActorParams& actor, const CriticParams& critic,
                       const GradientSettings& gs);
/// sum_t (target_t - v(s_t))^2.
double critic_surrogate(const Trajectory& traj, const CriticParams& critic);

/// Adds the gradients of both surrogates over `traj` (targets must be assigned)
/// into `acc`. Throws on non-finite gradients.
void accumulate_gradients(const Trajectory& traj, const ActorParams& actor,
                          const CriticParams& critic, const GradientSettings& gs, GradAccum& acc);

/// actor += lr_actor * g, critic -= lr_critic * g, each block clipped to
/// `grad_clip` in L2 norm (0 disables). log_std is re-clamped afterwards.
void apply_update(ActorParams& actor, CriticParams& critic, const GradAccum& g, double lr_actor,
                  double lr_critic, double grad_clip = 0.0);

struct ParamSnapshot {
  ActorParams actor;
  CriticParams critic;
  std::uint64_t version = 0;  // number of updates applied when taken
};

/// Owner of the canonical parameters. Messages (updates and snapshot
/// requests) are handled strictly in arrival order by `run`.
class GlobalAgent {
 public:
  GlobalAgent(ActorParams actor, CriticParams critic, const TrainingConfig& cfg);

  void submit(GradAccum g);
  /// Blocks until every message submitted before this call has been handled.
  ParamSnapshot request_snapshot();
  /// Global loop; returns once `close` was called and the queue is drained.
  void run();
  void close();

  /// Shared step counter T.
  std::uint64_t add_steps(std::uint64_t k) { return steps_.fetch_add(k) + k; }
  std::uint64_t steps() const { return steps_.load(); }
  bool finished() const { return steps_.load() > cfg_.total_steps; }

  std::uint64_t updates_applied() const { return applied_; }
  const ActorParams& actor() const { return actor_; }
  const CriticParams& critic() const { return critic_; }
  const std::vector<std::size_t>& applied_from() const { return applied_from_; }

 private:
  using Message = std::variant<GradAccum, std::promise<ParamSnapshot>>;

  TrainingConfig cfg_;
  ActorParams actor_;
  CriticParams critic_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
  bool closed_ = false;
  bool stopped_ = false;
  std::atomic<std::uint64_t> steps_{0};
  std::uint64_t applied_ = 0;
  std::vector<std::size_t> applied_from_;
};

struct EpisodeRecord {
  std::size_t worker = 0;
  std::uint64_t episode = 0;
  double cost = 0.0;        // negative cumulative (unscaled) reward
  double ee = 0.0;          // episode energy per bit
  double mean_backlog = 0.0;
};

using SlotSink = std::function<void(std::size_t worker, const SlotMetrics&)>;

/// One learning agent: a private environment replica plus its random source.
class Worker {
 public:
  Worker(const SimConfig& cfg, std::uint64_t seed, std::size_t id);

  /// Rolls up to t_max steps with the snapshot policy, stopping early at an
  /// episode boundary. Completed episodes are appended to `episodes`.
  Trajectory rollout(const ParamSnapshot& snap, std::vector<EpisodeRecord>& episodes,
                     const SlotSink& sink = {});

  std::size_t id() const { return id_; }
  Env& env() { return env_; }
  const GradientSettings& settings() const { return settings_; }

 private:
  SimConfig cfg_;
  std::size_t id_;
  Env env_;
  Rng rng_;
  GradientSettings settings_;
  Eigen::VectorXd obs_;
  double ep_reward_ = 0.0;
  double ep_energy_ = 0.0;
  double ep_bits_ = 0.0;
  double ep_backlog_ = 0.0;
  std::size_t ep_slots_ = 0;
};

/// Worker body: snapshot, rollout, gradient, submit; until T > T_max.
void worker_loop(Worker& worker, GlobalAgent& global, const TrainingConfig& cfg,
                 std::vector<EpisodeRecord>& episodes, const SlotSink& sink = {});

struct TrainOutcome {
  ActorParams actor;
  CriticParams critic;
  std::vector<EpisodeRecord> episodes;  // in completion order
  std::uint64_t updates_applied = 0;
  std::uint64_t steps = 0;
};

/// Initial parameters for a config and seed (shared by the sync and async paths).
ParamSnapshot initial_params(const SimConfig& cfg, std::uint64_t seed);

/// K workers plus the global agent on threads.
TrainOutcome train_async(const SimConfig& cfg, std::uint64_t seed, const SlotSink& sink = {});
/// Single-threaded reference: snapshot, rollout, gradient, apply.
TrainOutcome train_sync(const SimConfig& cfg, std::uint64_t seed, const SlotSink& sink = {});

/// Divisor applied to rewards before they reach the learner.
double effective_reward_scale(const SimConfig& cfg);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt);

}  // namespace dtwin
