#include "dtwin/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dtwin {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

ActorParams ActorParams::init(std::size_t state_dim, std::size_t action_dim,
                              std::span<const std::size_t> hidden, double init_log_std, Rng& rng) {
  ActorParams a;
  a.net = MlpParams::init(state_dim, hidden, action_dim, rng);
  a.log_std = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(action_dim),
                                        std::clamp(init_log_std, kLogStdMin, kLogStdMax));
  return a;
}

ActorParams ActorParams::zeros_like(const ActorParams& other) {
  return {MlpParams::zeros_like(other.net), Eigen::VectorXd::Zero(other.log_std.size())};
}

std::vector<double> ActorParams::flatten() const {
  auto out = net.flatten();
  out.insert(out.end(), log_std.data(), log_std.data() + log_std.size());
  return out;
}

void ActorParams::assign(std::span<const double> flat) {
  const auto k = net.parameter_count();
  if (flat.size() != k + action_dim()) throw std::invalid_argument("flat actor size mismatch");
  net.assign(flat.first(k));
  for (std::size_t i = 0; i < action_dim(); ++i) log_std(static_cast<Eigen::Index>(i)) = flat[k + i];
}

double& ActorParams::coefficient(std::size_t idx) {
  const auto k = net.parameter_count();
  if (idx < k) return net.coefficient(idx);
  if (idx - k < action_dim()) return log_std(static_cast<Eigen::Index>(idx - k));
  throw std::out_of_range("actor parameter index out of range");
}

CriticParams CriticParams::init(std::size_t state_dim, std::span<const std::size_t> hidden, Rng& rng) {
  return {MlpParams::init(state_dim, hidden, 1, rng)};
}

CriticParams CriticParams::zeros_like(const CriticParams& other) {
  return {MlpParams::zeros_like(other.net)};
}

PolicyOutput actor_forward(const Eigen::VectorXd& state, const ActorParams& actor) {
  PolicyOutput out;
  out.logits = mlp_forward(actor.net, state).col(0);
  out.means = out.logits.unaryExpr([](double v) { return sigmoid(v); });
  out.log_std = actor.log_std;
  return out;
}

double critic_forward(const Eigen::VectorXd& state, const CriticParams& critic) {
  return mlp_forward(critic.net, state)(0, 0);
}

double squashed_log_prob(const Eigen::VectorXd& z, const Eigen::VectorXd& logits,
                         const Eigen::VectorXd& log_std, const Eigen::VectorXd& active) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (active.size() > 0 && active(k) == 0.0) continue;
    const double sd = std::exp(log_std(k));
    const double e = (z(k) - logits(k)) / sd;
    const double gauss = -0.5 * e * e - log_std(k) - half_log_2pi;
    // du/dz = u(1-u); log u + log(1-u) = log_sigmoid(z) + log_sigmoid(-z).
    lp += gauss - (log_sigmoid(z(k)) + log_sigmoid(-z(k)));
  }
  return lp;
}

SampledAction sample_action(const PolicyOutput& out, Rng& rng, bool explore,
                            const Eigen::VectorXd& active) {
  SampledAction s;
  s.pre_squash = out.logits;
  if (explore) {
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Eigen::Index k = 0; k < s.pre_squash.size(); ++k)
      s.pre_squash(k) += std::exp(out.log_std(k)) * noise(rng);
  }
  s.u = s.pre_squash.unaryExpr([](double v) { return sigmoid(v); });
  s.log_prob = squashed_log_prob(s.pre_squash, out.logits, out.log_std, active);
  return s;
}

double advantage(double reward, double v_next, double v_now, double discount) {
  return reward + discount * v_next - v_now;
}

}  // namespace dtwin
