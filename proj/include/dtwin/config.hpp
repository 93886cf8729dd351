#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dtwin {

// All quantities are SI: W, Hz, bits, seconds, cycles/s, metres.

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class SmallCellLayout { ring, random, explicit_positions };
enum class Mobility { fixed, random_walk };

struct NetConfig {
  std::size_t num_devices = 20;
  std::size_t num_small_cells = 3;
  double region_width = 1000.0;
  double region_height = 1000.0;
  SmallCellLayout layout = SmallCellLayout::ring;
  double ring_fraction = 0.3;  // ring radius as a fraction of the shorter region side
  std::vector<Point> small_cell_positions;
  double coverage_radius = 250.0;
  double p_max = 0.1;
  double f_local = 0.5e9;
  double f_edge_small = 10e9;
  double f_edge_macro = 50e9;
  double bandwidth_small = 5e6;
  double bandwidth_macro = 10e6;
  double path_loss_exp = 3.0;
  double noise_power = 1e-14;
  double min_distance = 1.0;
  Mobility mobility = Mobility::fixed;
  double walk_step = 5.0;
};

struct EnergyConfig {
  double switched_cap = 1e-27;
  double cycles_per_bit = 100.0;
  double slot_len = 0.1;
  double edge_energy_coeff = 1.0;
};

enum class ArrivalDistribution { poisson_scaled, uniform };

struct ArrivalConfig {
  double mean_bits = 1e6;
  ArrivalDistribution distribution = ArrivalDistribution::poisson_scaled;
  // Poisson counts of this many bits each; variance is mean_bits * unit_bits.
  double unit_bits = 1e4;
};

struct LyapunovConfig {
  double v_weight = 1e3;
  double infeasible_penalty = -1e6;
};

struct TrainingConfig {
  double discount = 0.99;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  std::size_t t_max = 20;
  std::uint64_t total_steps = 600000;  // T_max, counted in environment steps
  std::size_t workers = 1;
  std::size_t episode_len = 200;
  double entropy_coeff = 0.01;
  double grad_clip = 40.0;
  std::vector<std::size_t> hidden = {128, 128, 128};
  double init_log_std = -1.0;
  // Rewards are divided by this before entering the learner; reported costs are
  // unscaled. 0 selects N * (10 lambda) * lambda / (1 - discount).
  double reward_scale = 0.0;
};

enum class Scheme { joint, no_compute_alloc, no_radio_alloc, random_feasible, greedy_drift };

struct SimConfig {
  NetConfig net;
  EnergyConfig energy;
  ArrivalConfig arrivals;
  LyapunovConfig lyapunov;
  TrainingConfig training;
  Scheme scheme = Scheme::joint;
  std::vector<std::uint64_t> seeds = {1};
  std::size_t eval_slots = 10000;
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

}  // namespace dtwin
