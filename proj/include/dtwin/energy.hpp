#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/config.hpp"
#include "dtwin/task_queue.hpp"

namespace dtwin {

struct SlotEnergy {
  std::vector<double> local;  // E_i^l
  Eigen::MatrixXd edge;       // E_ij^e
  double total = 0.0;         // E^tol
};

/// varsigma * tau * f^3.
double local_energy(double f_alloc, const EnergyConfig& cfg);

/// p*tau + (d*c/f)*epsilon. Throws when bits are offloaded to a zero compute share.
double edge_energy(double power, double d_offload, double f_edge_alloc, const EnergyConfig& cfg);

/// Per-device and per-link energies plus their exact sum. Links with zero
/// power and zero offload contribute nothing.
SlotEnergy total_energy(const SlotFlows& flows, std::span<const double> f_local_alloc,
                        std::span<const double> power, const Eigen::MatrixXd& f_edge_alloc,
                        const std::vector<std::size_t>& association, const EnergyConfig& cfg);

struct SlotEe {
  double value = 0.0;     // J/bit
  bool zero_throughput = false;
};

SlotEe slot_ee(double energy, double accomplished_bits);

/// Long-run energy per bit as a ratio of sums. Zero-throughput slots leave
/// both sums untouched and are counted separately.
struct EnergyTracker {
  double cum_energy = 0.0;
  double cum_bits = 0.0;
  double ee_estimate = 0.0;
  std::uint64_t slots = 0;
  std::uint64_t zero_throughput_slots = 0;
};

EnergyTracker update_tracker(EnergyTracker tracker, double energy, double bits);

}  // namespace dtwin
