#pragma once

#include <vector>

#include "dtwin/env.hpp"

namespace dtwin {

/// Uniform raw action in the unit hypercube.
std::vector<double> random_raw_action(const ActionLayout& layout, Rng& rng);

struct GreedyOptions {
  std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t passes = 1;
};

/// Coordinate descent on the slot objective over a grid of raw values,
/// visiting only coordinates that can change the projected action (the
/// associated pair of each device, powers, departures and local compute).
/// Starts from the all-ones raw action.
std::vector<double> greedy_drift_action(const Env& env, const GreedyOptions& opt = {});

}  // namespace dtwin
