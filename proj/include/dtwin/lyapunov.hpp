#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dtwin/task_queue.hpp"

namespace dtwin {

struct Perturbation {
  std::vector<double> beta;  // bits, one per device
};

/// beta_i = V * ee_estimate + psi_max for every device.
Perturbation predict_perturbation(std::size_t num_devices, double v_weight, double ee_estimate,
                                  double psi_max);

/// 1/2 * (sum_i (Q_i^l - beta_i)^2 + sum_j (Q_j^e)^2).
double lyapunov_value(const QueueState& theta, const Perturbation& beta);

/// Per-slot upper bounds entering the drift constant.
struct DriftBounds {
  std::vector<double> psi_device_max;  // Psi_{i,max}
  std::vector<double> arrival_max;     // lambda_{i,max}
  std::vector<double> psi_edge_max;    // Psi_{j,max}
  Eigen::MatrixXd offload_max;         // D^e_{ij,max}, N x (M+1)
};

double drift_bound_constant(const DriftBounds& bounds);

struct P2Terms {
  double penalty = 0.0;     // V [E - eta * bits]
  double edge_term = 0.0;   // sum_j Q_j^e [sum_i D_ij^e - Psi_j]
  double local_term = 0.0;  // -sum_i [Q_i^l - beta_i][Psi_i - lambda_i]
  double total = 0.0;
};

/// Per-slot drift-plus-penalty objective (lower is better). Throws when the
/// flows are inconsistent or negative.
P2Terms p2_objective(const SlotFlows& flows, double energy_total, const QueueState& theta,
                     const Perturbation& beta, double v_weight, double eta_slot);

/// Negated objective for feasible slots, the configured penalty otherwise.
double immediate_reward(double objective, bool feasible, double penalty);

struct DriftCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

/// Sample-path drift-plus-penalty audit: L(next) - L(now) + V*eta against the bound.
DriftCheck drift_plus_penalty_check(const QueueState& now, const QueueState& next,
                                    const SlotFlows& flows, const Perturbation& beta,
                                    double v_weight, double eta_slot, double bound_constant);

}  // namespace dtwin
