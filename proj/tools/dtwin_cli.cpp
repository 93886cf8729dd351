// Command-line front end: train, eval, sweep, check.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dtwin/checkpoint.hpp"
#include "dtwin/checks.hpp"
#include "dtwin/config_io.hpp"
#include "dtwin/harness.hpp"
#include "dtwin/schemes.hpp"

namespace fs = std::filesystem;
using namespace dtwin;

namespace {

// DTWIN_VERBOSE: 0 quiet, 1 progress (default), 2 also echo the effective config.
int verbosity() {
  const char* v = std::getenv("DTWIN_VERBOSE");
  return v ? std::atoi(v) : 1;
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string scheme;
  std::string out;
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_out) {
  c.out = default_out;
  cmd->add_option("--config", c.config, "JSON config file (defaults apply when omitted)")->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "seed (default: first seed in config)");
  cmd->add_option("--scheme", c.scheme, "joint, no-compute-alloc, no-radio-alloc, random-feasible, greedy-drift");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--workers", c.workers, "number of worker agents K");
}

SimConfig resolve(const Common& c) {
  LoadedConfig lc;
  if (!c.config.empty()) lc = load_config(c.config);
  SimConfig& cfg = lc.config;
  if (!c.scheme.empty()) cfg.scheme = scheme_from_string(c.scheme);
  if (c.workers > 0) cfg.training.workers = c.workers;
  validate_config(cfg);
  if (verbosity() >= 1) {
    std::cerr << "config hash " << hash_hex(config_hash(cfg));
    if (!lc.defaulted.empty()) std::cerr << ", " << lc.defaulted.size() << " fields at defaults";
    std::cerr << "\n";
  }
  if (verbosity() >= 2) {
    std::cerr << config_to_json(cfg).dump(2) << "\n";
    for (const auto& d : lc.defaulted) std::cerr << "  default: " << d << "\n";
  }
  return cfg;
}

std::uint64_t seed_of(const Common& c, const SimConfig& cfg) { return c.seed_set ? c.seed : cfg.seeds.front(); }

void print_record(const RunRecord& r) {
  std::cout << "scheme " << r.scheme << " seed " << r.seed << " episodes " << r.episode_costs.size()
            << " final_cost " << fmt(r.final_cost) << " eval_cost " << fmt(r.eval_cost) << " slope "
            << fmt(r.stability.slope) << " [" << fmt(r.stability.ci_low) << ", " << fmt(r.stability.ci_high)
            << "] wall " << r.wall_clock_s << "s\n";
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin edge offloading simulator with an asynchronous actor-critic learner"};
  app.require_subcommand(1);

  Common train_c, eval_c, sweep_c, check_c;
  std::uint64_t steps = 0;
  bool sync = false, no_slots = false;
  auto* train = app.add_subcommand("train", "train a learned scheme and export its artifacts");
  add_common(train, train_c, "runs/train");
  train->add_option("--steps", steps, "override total environment steps T_max");
  train->add_flag("--sync", sync, "single-threaded reference trainer");
  train->add_flag("--no-slot-metrics", no_slots, "skip per-slot CSVs");

  std::string ckpt;
  std::size_t eval_slots = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or a baseline scheme");
  add_common(eval, eval_c, "runs/eval");
  eval->add_option("--checkpoint", ckpt, "checkpoint for learned schemes")->check(CLI::ExistingFile);
  eval->add_option("--slots", eval_slots, "override evaluation slots");

  std::string axis, values, schemes = "joint,no-compute-alloc,no-radio-alloc";
  std::vector<std::uint64_t> sweep_seeds;
  std::size_t jobs = 1;
  std::uint64_t sweep_steps = 0;
  auto* sw = app.add_subcommand("sweep", "cross-product sweep over one axis");
  add_common(sw, sweep_c, "runs/sweep");
  sw->add_option("--axis", axis, "N, M, learning_rate or V")->required();
  sw->add_option("--values", values, "comma-separated axis values")->required();
  sw->add_option("--seeds", sweep_seeds, "seeds (default: config seeds)");
  sw->add_option("--schemes", schemes, "comma-separated scheme tags");
  sw->add_option("--jobs", jobs, "cells run concurrently");
  sw->add_option("--steps", sweep_steps, "override total environment steps T_max");

  auto* check = app.add_subcommand("check", "run the invariant suite");
  add_common(check, check_c, "");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = resolve(train_c);
      if (steps > 0) cfg.training.total_steps = steps;
      RunOptions opt;
      opt.out_dir = fs::path(train_c.out);
      opt.slot_metrics = !no_slots;
      opt.sync = sync;
      print_record(run_training(cfg, seed_of(train_c, cfg), opt).record);
      if (verbosity() >= 1) std::cerr << "artifacts in " << train_c.out << "\n";
      return 0;
    }
    if (*eval) {
      auto cfg = resolve(eval_c);
      if (eval_slots > 0) cfg.eval_slots = eval_slots;
      const auto seed = seed_of(eval_c, cfg);
      RunOptions opt;
      opt.out_dir = fs::path(eval_c.out);
      if (!scheme_spec(cfg.scheme).learns) {
        print_record(run_baseline(cfg, cfg.scheme, seed, opt).record);
        return 0;
      }
      if (ckpt.empty()) throw std::invalid_argument("learned scheme " + to_string(cfg.scheme) + " needs --checkpoint");
      const auto ck = load_checkpoint(ckpt);
      if (ck.config_hash != config_hash(cfg) && verbosity() >= 1)
        std::cerr << "warning: checkpoint was trained under config " << hash_hex(ck.config_hash) << "\n";
      fs::create_directories(*opt.out_dir);
      SlotCsv slots(*opt.out_dir / "eval_slots.csv");
      QueueCsv queues(*opt.out_dir / "queues.csv");
      const auto ev = evaluate(cfg, make_policy(cfg.scheme, &ck.actor), seed, cfg.eval_slots, {&slots, &queues});
      RunRecord r;
      r.config_hash = hash_hex(config_hash(cfg));
      r.seed = seed;
      r.scheme = to_string(cfg.scheme);
      r.episode_costs = ev.episode_costs;
      r.final_cost = tail_mean(ev.episode_costs);
      r.eval_cost = r.final_cost;
      r.final_ee = ev.ee;
      r.stability = ev.stability;
      r.steps = cfg.eval_slots;
      std::ofstream(*opt.out_dir / "summary.json") << nlohmann::json{{"record", record_to_json(r)},
                                                                     {"config", config_to_json(cfg)}}.dump(2)
                                                   << "\n";
      print_record(r);
      return 0;
    }
    if (*sw) {
      auto cfg = resolve(sweep_c);
      if (sweep_steps > 0) cfg.training.total_steps = sweep_steps;
      std::vector<Scheme> sch;
      std::stringstream ss(schemes);
      for (std::string tok; std::getline(ss, tok, ',');) sch.push_back(scheme_from_string(tok));
      if (sweep_seeds.empty()) sweep_seeds = cfg.seeds;
      if (sweep_c.seed_set) sweep_seeds = {sweep_c.seed};
      const auto ax = sweep_axis_from_string(axis);
      SweepOptions opt;
      opt.jobs = jobs;
      opt.run.slot_metrics = false;
      const auto rows = sweep(cfg, ax, parse_list(values), sweep_seeds, sch, opt);
      const fs::path out(sweep_c.out);
      write_sweep_csv(out / ("sweep_" + to_string(ax) + ".csv"), rows);
      write_plot_data(out / ("plot_" + to_string(ax) + ".csv"), rows);
      for (const auto& r : rows) print_record(r.record);
      return 0;
    }
    if (*check) {
      const auto cfg = resolve(check_c);
      const auto results = run_invariant_suite(cfg, seed_of(check_c, cfg));
      bool ok = true;
      nlohmann::json js = nlohmann::json::array();
      for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << "s): " << r.detail << "\n";
        js.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
        ok = ok && r.passed;
      }
      if (!check_c.out.empty()) {
        fs::create_directories(check_c.out);
        std::ofstream(fs::path(check_c.out) / "checks.json") << js.dump(2) << "\n";
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
