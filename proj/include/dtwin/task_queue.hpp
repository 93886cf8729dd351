#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/config.hpp"
#include "dtwin/net_model.hpp"

namespace dtwin {

/// Theta(t): device (local) and edge-server backlogs, in bits.
struct QueueState {
  std::vector<double> local;
  std::vector<double> edge;

  static QueueState zeros(std::size_t n, std::size_t m_plus_1) {
    return {std::vector<double>(n, 0.0), std::vector<double>(m_plus_1, 0.0)};
  }
  double total_local() const;
  double total_edge() const;
  bool operator==(const QueueState&) const = default;
};

struct SlotFlows {
  std::vector<double> d_local;   // D_i^l
  Eigen::MatrixXd d_offload;     // D_ij^e, N x (M+1)
  std::vector<double> psi_device;
  std::vector<double> psi_edge;
  std::vector<double> arrivals;  // lambda_i(t)

  static SlotFlows zeros(std::size_t n, std::size_t m_plus_1);
  /// Sum over devices of D_ij^e for station j.
  double inflow(std::size_t j) const;
  /// Bits accomplished this slot: local execution plus offloaded bits, each counted once.
  double accomplished_bits() const;
};

std::vector<double> sample_arrivals(const ArrivalConfig& process, std::size_t num_devices, Rng& rng);

/// tau*f/c, capped at the backlog available for service. Throws on negative f.
double local_exec_amount(double f_alloc, double slot_len, double cycles_per_bit, double available);

/// rate*tau, capped at the backlog left after local service.
double offload_amount(double rate, double slot_len, double available);

/// max(q - psi, 0) + arrival.
double step_device_queue(double q, double psi, double arrival);

/// max(q - psi_j, 0) + inflow. Throws if psi_j*c exceeds f_edge*tau.
double step_edge_queue(double q, double psi_j, double inflow, double f_edge, double slot_len,
                       double cycles_per_bit);

struct StabilityReport {
  double mean_local = 0.0;  // (1/T) sum_t sum_i Q_i^l(t)
  double mean_edge = 0.0;   // (1/T) sum_t sum_j Q_j^e(t)
  // Least-squares slope of total backlog against t over the second half of the horizon.
  double slope = 0.0;
  double slope_stderr = 0.0;  // autocorrelation-robust (Newey-West)
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool ci_contains_zero() const { return ci_low <= 0.0 && 0.0 <= ci_high; }
};

StabilityReport stability_metric(std::span<const QueueState> history);
/// Same statistic over precomputed per-slot totals.
StabilityReport stability_metric(std::span<const double> local_totals,
                                 std::span<const double> edge_totals);

}  // namespace dtwin
