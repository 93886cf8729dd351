#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/config.hpp"
#include "dtwin/energy.hpp"
#include "dtwin/lyapunov.hpp"
#include "dtwin/net_model.hpp"
#include "dtwin/task_queue.hpp"

namespace dtwin {

/// Offsets of the five action blocks inside the raw actor output:
/// [bandwidth N(M+1) | power N | edge departure M+1 | local compute N | edge compute N(M+1)].
/// Matrix blocks are row-major over (device, station).
struct ActionLayout {
  std::size_t num_devices = 0;
  std::size_t num_stations = 0;  // M+1

  std::size_t bandwidth() const { return 0; }
  std::size_t power() const { return num_devices * num_stations; }
  std::size_t departure() const { return power() + num_devices; }
  std::size_t local_compute() const { return departure() + num_stations; }
  std::size_t edge_compute() const { return local_compute() + num_devices; }
  std::size_t size() const { return edge_compute() + num_devices * num_stations; }
};

struct Action {
  Eigen::MatrixXd bandwidth;            // w_ij, Hz
  std::vector<double> power;            // p_i, W
  std::vector<double> edge_departure;   // Psi_j, bits
  std::vector<double> local_compute;    // f_i^l, cycles/s
  Eigen::MatrixXd edge_compute;         // f_ij^e, cycles/s

  static Action zeros(std::size_t n, std::size_t m_plus_1);
};

/// Observation block layout: [rates N(M+1) | capacities N+M+1 | p_max N |
/// bandwidth M+1 | local queues N | edge queues M+1].
struct StateVector {
  Eigen::MatrixXd rates;            // bit/s, zero off the association
  std::vector<double> capacities;   // f_1^l..f_N^l, f_0^e..f_M^e
  std::vector<double> p_max;
  std::vector<double> bandwidth;
  QueueState queues;

  static std::size_t dimension(std::size_t n, std::size_t m_plus_1);
  std::vector<double> flatten() const;
  static StateVector unflatten(std::size_t n, std::size_t m_plus_1, std::span<const double> flat);
  bool operator==(const StateVector&) const = default;
};

/// Divisors applied to each observation block before it reaches the networks.
struct StateNormalizer {
  double rate_scale = 1.0;
  double f_local = 1.0;
  double f_edge_small = 1.0;
  double f_edge_macro = 1.0;
  double p_max = 1.0;
  double bandwidth_small = 1.0;
  double bandwidth_macro = 1.0;
  double queue_scale = 1.0;

  static StateNormalizer from_config(const SimConfig& cfg);
  Eigen::VectorXd features(const StateVector& s) const;
};

/// JSON description of the observation and action layouts.
std::string layout_schema(std::size_t n, std::size_t m_plus_1, const StateNormalizer& norm);

StateVector build_state(const Topology& topo, const ChannelRealization& channel,
                        const QueueState& queues);

/// Maps a point of the unit hypercube onto an action satisfying the bandwidth,
/// power, local compute, edge compute and edge departure constraints.
Action project_action(std::span<const double> u, const Topology& topo, const QueueState& queues,
                      const EnergyConfig& energy);

struct FeasibilityReport {
  bool feasible = true;
  std::string first_violation;
};

/// Audits all per-slot allocation constraints with a relative tolerance on sums.
FeasibilityReport check_feasible(const Action& a, const Topology& topo, const QueueState& queues,
                                 const EnergyConfig& energy, double tol = 1e-9);

/// Everything a single slot produces for a given action, without mutating the world.
struct SlotOutcome {
  Eigen::MatrixXd rates;
  SlotFlows flows;
  SlotEnergy energy;
  SlotEe ee;
  P2Terms objective;
  double reward = 0.0;
  QueueState next_queues;
};

struct SlotMetrics {
  std::uint64_t episode = 0;
  std::uint64_t slot = 0;
  double arrivals = 0.0;
  double local_bits = 0.0;
  double offload_bits = 0.0;
  double edge_departure = 0.0;
  double e_local = 0.0;
  double e_edge = 0.0;
  double e_total = 0.0;
  double eta_slot = 0.0;
  bool zero_throughput = false;
  double ee_estimate = 0.0;
  double beta = 0.0;
  double objective = 0.0;
  double reward = 0.0;
  double drift_lhs = 0.0;
  double drift_rhs = 0.0;
  double bound_constant = 0.0;
  double backlog_local = 0.0;  // after the update
  double backlog_edge = 0.0;
};

struct StepResult {
  StateVector next_state;
  double reward = 0.0;
  SlotMetrics metrics;
  SlotOutcome outcome;
  bool episode_done = false;
};

/// One replica of the digital-twin network. Owns its topology, channel,
/// queues, energy tracker and random source.
class Env {
 public:
  Env(SimConfig cfg, std::uint64_t seed);

  StateVector reset();
  StepResult step(const Action& action);
  /// Pure evaluation of the current slot under `action`.
  SlotOutcome simulate(const Action& action) const;
  Action project(std::span<const double> u) const;

  StateVector state() const { return build_state(topo_, channel_, queues_); }
  Eigen::VectorXd features() const { return normalizer_.features(state()); }

  const SimConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const ChannelRealization& channel() const { return channel_; }
  const QueueState& queues() const { return queues_; }
  const std::vector<double>& arrivals() const { return arrivals_; }
  const Perturbation& perturbation() const { return beta_; }
  const EnergyTracker& tracker() const { return tracker_; }
  const StateNormalizer& normalizer() const { return normalizer_; }
  ActionLayout action_layout() const { return {topo_.num_devices(), topo_.num_stations()}; }
  std::size_t state_dim() const { return StateVector::dimension(topo_.num_devices(), topo_.num_stations()); }
  std::uint64_t slot() const { return slot_; }
  std::uint64_t episode() const { return episode_; }
  double psi_max() const { return psi_max_; }

  /// Analytic per-slot caps for the drift constant under the current channel.
  DriftBounds drift_bounds() const;

  // Test hooks: overwrite parts of the world between slots.
  void set_queues(QueueState q) { queues_ = std::move(q); }
  void set_arrivals(std::vector<double> a) { arrivals_ = std::move(a); }
  void set_channel(ChannelRealization c) { channel_ = std::move(c); }
  void set_topology(Topology t) { topo_ = std::move(t); }
  void set_perturbation(Perturbation b) { beta_ = std::move(b); }

 private:
  void begin_slot();

  SimConfig cfg_;
  Rng rng_;
  StateNormalizer normalizer_;
  Topology topo_;
  ChannelRealization channel_;
  QueueState queues_;
  std::vector<double> arrivals_;
  Perturbation beta_;
  EnergyTracker tracker_;
  double psi_max_ = 0.0;
  std::uint64_t slot_ = 0;
  std::uint64_t episode_ = 0;
  bool started_ = false;
};

/// Raw coordinates that the projection does not discard for this topology:
/// the associated pair of each device in the bandwidth and edge compute
/// blocks, plus every power, departure and local compute coordinate.
std::vector<std::size_t> relevant_coordinates(const Topology& topo);
/// 1/0 per raw coordinate, from relevant_coordinates.
Eigen::VectorXd relevant_mask(const Topology& topo);

/// Per-device cap of the arrival distribution used in drift audits.
double arrival_cap(const ArrivalConfig& a);

}  // namespace dtwin
