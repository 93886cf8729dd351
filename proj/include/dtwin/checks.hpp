#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtwin/config.hpp"

namespace dtwin {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// env.step against a straight-line recomputation of rates, flows, queues
/// and energies from the pre-step world.
CheckResult check_queue_oracle(const SimConfig& cfg, std::uint64_t seed, std::size_t slots = 1000);
/// reward + slot objective = 0, with the objective recomputed term by term.
CheckResult check_reward_identity(const SimConfig& cfg, std::uint64_t seed, std::size_t slots = 10000);
/// Sample-path drift-plus-penalty inequality and validity of the bound caps.
CheckResult check_drift_bound(const SimConfig& cfg, std::uint64_t seed, std::size_t slots = 10000);
/// Finite differences on a 2-unit network (all coordinates) and on the
/// configured architecture (`full_coords` sampled coordinates per network).
CheckResult check_gradients(const SimConfig& cfg, std::uint64_t seed, std::size_t full_coords = 100);
/// Projection audit over random raw actions for the joint scheme and both ablation masks.
CheckResult check_feasibility(const SimConfig& cfg, std::uint64_t seed, std::size_t samples = 100000);
/// One-worker asynchronous training against the synchronous reference, bit for bit.
CheckResult check_async_replay(const SimConfig& cfg, std::uint64_t seed);
/// Greedy-drift baseline at half the service capacity; backlog slope CI must contain 0.
CheckResult check_stability_witness(const SimConfig& cfg, std::uint64_t seed, std::size_t slots = 10000);

/// Mean per-slot bits the network can serve: local execution of every
/// device plus, per station, the lesser of its uplink (nominal rates) and
/// its edge budget.
double total_service_capacity(const SimConfig& cfg, std::uint64_t seed, std::size_t samples = 200);

std::vector<CheckResult> run_invariant_suite(const SimConfig& cfg, std::uint64_t seed);

}  // namespace dtwin
