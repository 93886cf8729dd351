#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtwin/a3c.hpp"
#include "dtwin/baselines.hpp"
#include "dtwin/config.hpp"
#include "dtwin/task_queue.hpp"

namespace dtwin {

struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string scheme;
  std::vector<double> episode_costs;
  double final_cost = 0.0;  // mean cost over the final 20% of episodes
  double final_ee = 0.0;    // mean episode J/bit over the same window
  double eval_cost = 0.0;   // mean episode cost of the evaluation rollout
  StabilityReport stability;  // from the last evaluation episode
  std::uint64_t updates = 0;
  std::uint64_t steps = 0;
  double wall_clock_s = 0.0;
};

nlohmann::json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

/// Mean of the trailing `fraction` of `costs` (at least one entry).
double tail_mean(const std::vector<double>& costs, double fraction = 0.2);

// ---- metrics sinks ------------------------------------------------------------

/// Streams SlotMetrics rows; header written on open.
class SlotCsv {
 public:
  explicit SlotCsv(const std::filesystem::path& path);
  void write(std::size_t worker, const SlotMetrics& m);
  static std::string header();

 private:
  std::ofstream os_;
};

/// Streams per-slot queue backlogs, one row per device and station.
class QueueCsv {
 public:
  explicit QueueCsv(const std::filesystem::path& path);
  void write(std::uint64_t slot, const QueueState& q);

 private:
  std::ofstream os_;
};

void write_episodes_csv(const std::filesystem::path& path, const std::vector<EpisodeRecord>& eps);

/// Formats a double so that parsing it back gives the same value.
std::string fmt(double v);

// ---- evaluation ---------------------------------------------------------------

/// Raw action for the current slot of `env`.
using RawPolicy = std::function<std::vector<double>(const Env& env, Rng& rng)>;

RawPolicy make_policy(Scheme scheme, const ActorParams* actor = nullptr, const GreedyOptions& greedy = {});

struct EvalResult {
  std::vector<double> episode_costs;
  StabilityReport stability;
  double ee = 0.0;             // ratio of sums over all evaluated slots
  std::uint64_t infeasible = 0;
  std::vector<double> local_totals;  // of the last episode, per slot
  std::vector<double> edge_totals;
};

struct EvalSinks {
  SlotCsv* slots = nullptr;
  QueueCsv* queues = nullptr;
};

/// Runs `slots` steps with the training episode protocol (reset every
/// episode_len slots), applying the scheme mask before projection.
EvalResult evaluate(const SimConfig& cfg, const RawPolicy& policy, std::uint64_t seed, std::size_t slots,
                    const EvalSinks& sinks = {});

// ---- runs ---------------------------------------------------------------------

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // artifacts written here when set
  bool slot_metrics = true;                      // per-slot CSVs (can be large)
  bool sync = false;                             // single-threaded reference trainer
  GreedyOptions greedy;
};

struct RunResult {
  RunRecord record;
  std::optional<TrainOutcome> training;
};

/// Trains with cfg.scheme (a learned scheme), then evaluates the mean policy
/// for cfg.eval_slots. Artifacts: checkpoint.bin, episodes.csv, slots.csv,
/// eval_slots.csv, queues.csv, summary.json, state_layout.json.
RunResult run_training(const SimConfig& cfg, std::uint64_t seed, const RunOptions& opt = {});

/// Evaluation only, for the non-learning schemes.
RunResult run_baseline(const SimConfig& cfg, Scheme scheme, std::uint64_t seed, const RunOptions& opt = {});

/// Dispatches on whether the scheme learns.
RunResult run_scheme(const SimConfig& cfg, std::uint64_t seed, const RunOptions& opt = {});

// ---- sweeps -------------------------------------------------------------------

enum class SweepAxis { num_devices, num_small_cells, learning_rate, v_weight };
SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis a);
void apply_axis(SimConfig& cfg, SweepAxis axis, double value);

struct SweepRow {
  SweepAxis axis;
  double value = 0.0;
  std::string scheme;
  RunRecord record;
};

struct SweepOptions {
  std::size_t jobs = 1;  // concurrent cells
  RunOptions run;        // out_dir ignored per cell
};

/// Full cross-product values x seeds x schemes; rows ordered by (value, scheme, seed).
std::vector<SweepRow> sweep(const SimConfig& base, SweepAxis axis, const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, const std::vector<Scheme>& schemes,
                            const SweepOptions& opt = {});

/// Long-format table, one row per cell.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
/// (x, y, series) with y the seed-averaged final cost.
void write_plot_data(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

/// Seed-averaged final cost per (scheme, value), in ascending value order.
std::vector<std::pair<double, double>> seed_averaged(const std::vector<SweepRow>& rows, const std::string& scheme);

}  // namespace dtwin
