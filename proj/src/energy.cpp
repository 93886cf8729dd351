#include "dtwin/energy.hpp"

#include <numeric>
#include <stdexcept>

namespace dtwin {

double local_energy(double f_alloc, const EnergyConfig& cfg) {
  return cfg.switched_cap * cfg.slot_len * f_alloc * f_alloc * f_alloc;
}

double edge_energy(double power, double d_offload, double f_edge_alloc, const EnergyConfig& cfg) {
  double e = power * cfg.slot_len;
  if (d_offload > 0.0) {
    if (f_edge_alloc <= 0.0)
      throw std::invalid_argument("offloaded bits with no edge compute allocated");
    e += d_offload * cfg.cycles_per_bit / f_edge_alloc * cfg.edge_energy_coeff;
  }
  return e;
}

SlotEnergy total_energy(const SlotFlows& flows, std::span<const double> f_local_alloc,
                        std::span<const double> power, const Eigen::MatrixXd& f_edge_alloc,
                        const std::vector<std::size_t>& association, const EnergyConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(flows.d_local.size());
  SlotEnergy out;
  out.local.assign(flows.d_local.size(), 0.0);
  out.edge = Eigen::MatrixXd::Zero(n, flows.d_offload.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out.local[ui] = local_energy(f_local_alloc[ui], cfg);
    const auto j = static_cast<Eigen::Index>(association[ui]);
    out.edge(i, j) = edge_energy(power[ui], flows.d_offload(i, j), f_edge_alloc(i, j), cfg);
  }
  out.total = std::accumulate(out.local.begin(), out.local.end(), 0.0) + out.edge.sum();
  return out;
}

SlotEe slot_ee(double energy, double accomplished_bits) {
  if (accomplished_bits <= 0.0) return {0.0, true};
  return {energy / accomplished_bits, false};
}

EnergyTracker update_tracker(EnergyTracker tracker, double energy, double bits) {
  ++tracker.slots;
  if (bits <= 0.0) {
    ++tracker.zero_throughput_slots;
    return tracker;
  }
  tracker.cum_energy += energy;
  tracker.cum_bits += bits;
  tracker.ee_estimate = tracker.cum_energy / tracker.cum_bits;
  return tracker;
}

}  // namespace dtwin
