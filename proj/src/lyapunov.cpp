#include "dtwin/lyapunov.hpp"

#include <cmath>
#include <stdexcept>

namespace dtwin {

Perturbation predict_perturbation(std::size_t num_devices, double v_weight, double ee_estimate,
                                  double psi_max) {
  return {std::vector<double>(num_devices, v_weight * ee_estimate + psi_max)};
}

double lyapunov_value(const QueueState& theta, const Perturbation& beta) {
  if (theta.local.size() != beta.beta.size())
    throw std::invalid_argument("perturbation length does not match the device count");
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.local.size(); ++i) {
    const double d = theta.local[i] - beta.beta[i];
    acc += d * d;
  }
  for (double q : theta.edge) acc += q * q;
  return 0.5 * acc;
}

double drift_bound_constant(const DriftBounds& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.psi_device_max.size(); ++i)
    acc += b.psi_device_max[i] * b.psi_device_max[i] + b.arrival_max[i] * b.arrival_max[i];
  for (std::size_t j = 0; j < b.psi_edge_max.size(); ++j) {
    const double inflow = b.offload_max.col(static_cast<Eigen::Index>(j)).sum();
    acc += b.psi_edge_max[j] * b.psi_edge_max[j] + inflow * inflow;
  }
  return 0.5 * acc;
}

namespace {

void check_flows(const SlotFlows& f, const QueueState& theta, const Perturbation& beta) {
  const auto n = theta.local.size();
  const auto m = theta.edge.size();
  if (f.d_local.size() != n || f.psi_device.size() != n || f.arrivals.size() != n ||
      beta.beta.size() != n || f.psi_edge.size() != m ||
      static_cast<std::size_t>(f.d_offload.rows()) != n ||
      static_cast<std::size_t>(f.d_offload.cols()) != m)
    throw std::invalid_argument("slot flows do not match the queue dimensions");
  if ((f.d_offload.array() < 0.0).any() || !f.d_offload.allFinite())
    throw std::invalid_argument("negative or non-finite offload flow");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f.d_local[i] >= 0.0) || !(f.arrivals[i] >= 0.0))
      throw std::invalid_argument("negative or non-finite device flow");
    const double psi = f.d_local[i] + f.d_offload.row(static_cast<Eigen::Index>(i)).sum();
    if (std::fabs(psi - f.psi_device[i]) > 1e-9 * std::max(1.0, std::fabs(psi)))
      throw std::invalid_argument("device departure differs from local plus offloaded bits");
  }
  for (double p : f.psi_edge)
    if (!(p >= 0.0)) throw std::invalid_argument("negative or non-finite edge departure");
}

}  // namespace

P2Terms p2_objective(const SlotFlows& flows, double energy_total, const QueueState& theta,
                     const Perturbation& beta, double v_weight, double eta_slot) {
  check_flows(flows, theta, beta);
  P2Terms t;
  t.penalty = v_weight * (energy_total - eta_slot * flows.accomplished_bits());
  for (std::size_t j = 0; j < theta.edge.size(); ++j)
    t.edge_term += theta.edge[j] * (flows.inflow(j) - flows.psi_edge[j]);
  for (std::size_t i = 0; i < theta.local.size(); ++i)
    t.local_term -= (theta.local[i] - beta.beta[i]) * (flows.psi_device[i] - flows.arrivals[i]);
  t.total = t.penalty + t.edge_term + t.local_term;
  return t;
}

double immediate_reward(double objective, bool feasible, double penalty) {
  return feasible ? -objective : penalty;
}

DriftCheck drift_plus_penalty_check(const QueueState& now, const QueueState& next,
                                    const SlotFlows& flows, const Perturbation& beta,
                                    double v_weight, double eta_slot, double bound_constant) {
  const double penalty = v_weight * eta_slot;
  DriftCheck c;
  c.lhs = lyapunov_value(next, beta) - lyapunov_value(now, beta) + penalty;
  double rhs = bound_constant;
  for (std::size_t i = 0; i < now.local.size(); ++i)
    rhs -= (now.local[i] - beta.beta[i]) * (flows.psi_device[i] - flows.arrivals[i]);
  for (std::size_t j = 0; j < now.edge.size(); ++j)
    rhs -= now.edge[j] * (flows.psi_edge[j] - flows.inflow(j));
  c.rhs = rhs + penalty;
  return c;
}

}  // namespace dtwin
