#pragma once

#include <Eigen/Dense>

#include "dtwin/mlp.hpp"

namespace dtwin {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;

/// Squashed diagonal-Gaussian policy: the network emits pre-squash logits,
/// exploration noise is added in logit space and a sigmoid maps to (0, 1).
struct ActorParams {
  MlpParams net;
  Eigen::VectorXd log_std;  // state independent, kept inside [kLogStdMin, kLogStdMax]

  static ActorParams init(std::size_t state_dim, std::size_t action_dim,
                          std::span<const std::size_t> hidden, double init_log_std, Rng& rng);
  static ActorParams zeros_like(const ActorParams& other);
  std::size_t action_dim() const { return static_cast<std::size_t>(log_std.size()); }
  std::size_t parameter_count() const { return net.parameter_count() + action_dim(); }
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  double& coefficient(std::size_t idx);
};

struct CriticParams {
  MlpParams net;

  static CriticParams init(std::size_t state_dim, std::span<const std::size_t> hidden, Rng& rng);
  static CriticParams zeros_like(const CriticParams& other);
  std::size_t parameter_count() const { return net.parameter_count(); }
};

struct PolicyOutput {
  Eigen::VectorXd logits;   // pre-squash means
  Eigen::VectorXd means;    // sigmoid(logits)
  Eigen::VectorXd log_std;
};

PolicyOutput actor_forward(const Eigen::VectorXd& state, const ActorParams& actor);
double critic_forward(const Eigen::VectorXd& state, const CriticParams& critic);

struct SampledAction {
  Eigen::VectorXd pre_squash;  // z
  Eigen::VectorXd u;           // sigmoid(z)
  double log_prob = 0.0;       // density of u over active coordinates
};

/// Draws z ~ N(logits, exp(log_std)^2) per coordinate; with explore = false
/// returns the mean. `active` (1/0 per coordinate, empty = all) selects the
/// coordinates counted in the log-density.
SampledAction sample_action(const PolicyOutput& out, Rng& rng, bool explore = true,
                            const Eigen::VectorXd& active = {});

/// log density of u = sigmoid(z) under the squashed Gaussian, including the
/// change-of-variables term -log(u(1-u)).
double squashed_log_prob(const Eigen::VectorXd& z, const Eigen::VectorXd& logits,
                         const Eigen::VectorXd& log_std, const Eigen::VectorXd& active = {});

/// r + discount * v_next - v_now.
double advantage(double reward, double v_next, double v_now, double discount);

double sigmoid(double x);

}  // namespace dtwin
