#include "dtwin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "dtwin/checkpoint.hpp"
#include "dtwin/config_io.hpp"
#include "dtwin/schemes.hpp"
#include "dtwin/stats.hpp"

namespace dtwin {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

StabilityReport nan_stability() { return {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN}; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double tail_mean(const std::vector<double>& costs, double fraction) {
  if (costs.empty()) return kNaN;
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * costs.size())));
  return std::accumulate(costs.end() - static_cast<std::ptrdiff_t>(k), costs.end(), 0.0) / static_cast<double>(k);
}

json record_to_json(const RunRecord& r) {
  json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["scheme"] = r.scheme;
  j["episode_costs"] = json::array();
  for (double c : r.episode_costs) j["episode_costs"].push_back(num(c));
  j["final_cost"] = num(r.final_cost);
  j["final_ee"] = num(r.final_ee);
  j["eval_cost"] = num(r.eval_cost);
  j["stability"] = {{"mean_local", num(r.stability.mean_local)},
                    {"mean_edge", num(r.stability.mean_edge)},
                    {"slope", num(r.stability.slope)},
                    {"slope_stderr", num(r.stability.slope_stderr)},
                    {"ci_low", num(r.stability.ci_low)},
                    {"ci_high", num(r.stability.ci_high)}};
  j["updates"] = r.updates;
  j["steps"] = r.steps;
  j["wall_clock_s"] = r.wall_clock_s;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.scheme = j.at("scheme").get<std::string>();
  for (const auto& c : j.at("episode_costs")) r.episode_costs.push_back(num_from(c));
  r.final_cost = num_from(j.at("final_cost"));
  r.final_ee = num_from(j.at("final_ee"));
  r.eval_cost = num_from(j.at("eval_cost"));
  const auto& s = j.at("stability");
  r.stability = {num_from(s.at("mean_local")), num_from(s.at("mean_edge")), num_from(s.at("slope")),
                 num_from(s.at("slope_stderr")), num_from(s.at("ci_low")), num_from(s.at("ci_high"))};
  r.updates = j.at("updates").get<std::uint64_t>();
  r.steps = j.at("steps").get<std::uint64_t>();
  r.wall_clock_s = j.at("wall_clock_s").get<double>();
  return r;
}

// ---- sinks --------------------------------------------------------------------

std::string SlotCsv::header() {
  return "worker,episode,slot,arrivals,local_bits,offload_bits,edge_departure,e_local,e_edge,e_total,"
         "eta_slot,zero_throughput,ee_estimate,beta,objective,reward,drift_lhs,drift_rhs,bound_constant,"
         "backlog_local,backlog_edge";
}

SlotCsv::SlotCsv(const fs::path& path) : os_(open_out(path)) { os_ << header() << '\n'; }

void SlotCsv::write(std::size_t worker, const SlotMetrics& m) {
  os_ << worker << ',' << m.episode << ',' << m.slot << ',' << fmt(m.arrivals) << ',' << fmt(m.local_bits) << ','
      << fmt(m.offload_bits) << ',' << fmt(m.edge_departure) << ',' << fmt(m.e_local) << ',' << fmt(m.e_edge) << ','
      << fmt(m.e_total) << ',' << fmt(m.eta_slot) << ',' << (m.zero_throughput ? 1 : 0) << ','
      << fmt(m.ee_estimate) << ',' << fmt(m.beta) << ',' << fmt(m.objective) << ',' << fmt(m.reward) << ','
      << fmt(m.drift_lhs) << ',' << fmt(m.drift_rhs) << ',' << fmt(m.bound_constant) << ','
      << fmt(m.backlog_local) << ',' << fmt(m.backlog_edge) << '\n';
}

QueueCsv::QueueCsv(const fs::path& path) : os_(open_out(path)) { os_ << "slot,kind,id,backlog_bits\n"; }

void QueueCsv::write(std::uint64_t slot, const QueueState& q) {
  for (std::size_t i = 0; i < q.local.size(); ++i) os_ << slot << ",device," << i << ',' << fmt(q.local[i]) << '\n';
  for (std::size_t j = 0; j < q.edge.size(); ++j) os_ << slot << ",station," << j << ',' << fmt(q.edge[j]) << '\n';
}

void write_episodes_csv(const fs::path& path, const std::vector<EpisodeRecord>& eps) {
  auto os = open_out(path);
  os << "worker,episode,cost,ee,mean_backlog\n";
  for (const auto& e : eps)
    os << e.worker << ',' << e.episode << ',' << fmt(e.cost) << ',' << fmt(e.ee) << ',' << fmt(e.mean_backlog) << '\n';
}

// ---- evaluation ---------------------------------------------------------------

RawPolicy make_policy(Scheme scheme, const ActorParams* actor, const GreedyOptions& greedy) {
  switch (scheme) {
    case Scheme::random_feasible:
      return [](const Env& env, Rng& rng) { return random_raw_action(env.action_layout(), rng); };
    case Scheme::greedy_drift:
      return [greedy](const Env& env, Rng&) { return greedy_drift_action(env, greedy); };
    default:
      break;
  }
  if (!actor) throw std::invalid_argument("scheme " + to_string(scheme) + " needs trained actor parameters");
  return [actor](const Env& env, Rng& rng) {
    const auto s = sample_action(actor_forward(env.features(), *actor), rng, false);
    return std::vector<double>(s.u.data(), s.u.data() + s.u.size());
  };
}

EvalResult evaluate(const SimConfig& cfg, const RawPolicy& policy, std::uint64_t seed, std::size_t slots,
                    const EvalSinks& sinks) {
  Env env(cfg, derive_seed(seed, 1000, 3));
  Rng rng(derive_seed(seed, 1000, 4));
  EvalResult out;
  double ep_cost = 0.0, energy = 0.0, bits = 0.0;
  std::size_t ep_slots = 0;
  std::vector<double> local, edge;
  for (std::size_t s = 0; s < slots; ++s) {
    auto u = policy(env, rng);
    apply_scheme_mask(cfg.scheme, u, env.topology());
    const auto a = env.project(u);
    if (!check_feasible(a, env.topology(), env.queues(), cfg.energy).feasible) ++out.infeasible;
    const auto res = env.step(a);
    if (sinks.slots) sinks.slots->write(0, res.metrics);
    if (sinks.queues) sinks.queues->write(s, env.queues());
    ep_cost -= res.reward;
    energy += res.metrics.e_total;
    bits += res.metrics.local_bits + res.metrics.offload_bits;
    local.push_back(res.metrics.backlog_local);
    edge.push_back(res.metrics.backlog_edge);
    ++ep_slots;
    if (res.episode_done || (s + 1 == slots && out.episode_costs.empty())) {
      out.episode_costs.push_back(ep_cost);
      out.local_totals = std::move(local);
      out.edge_totals = std::move(edge);
      local.clear();
      edge.clear();
      ep_cost = 0.0;
      ep_slots = 0;
      if (res.episode_done) env.reset();
    }
  }
  out.ee = bits > 0.0 ? energy / bits : 0.0;
  out.stability = out.local_totals.size() >= 8 ? stability_metric(out.local_totals, out.edge_totals) : nan_stability();
  return out;
}

// ---- runs ---------------------------------------------------------------------

namespace {

void write_common_artifacts(const fs::path& dir, const SimConfig& cfg, const RunRecord& rec,
                            const EvalResult* ev) {
  fs::create_directories(dir);
  json summary;
  summary["record"] = record_to_json(rec);
  summary["config"] = config_to_json(cfg);
  summary["config_hash"] = rec.config_hash;
  summary["seed"] = rec.seed;
  json checks;
  if (ev) {
    checks["feasible_actions"] = ev->infeasible == 0;
    checks["backlog_slope_ci_contains_zero"] = rec.stability.ci_contains_zero();
  }
  summary["checks"] = checks;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  const auto n = cfg.net.num_devices;
  const auto m1 = cfg.net.num_small_cells + 1;
  write_text(dir / "state_layout.json", layout_schema(n, m1, StateNormalizer::from_config(cfg)) + "\n");
}

EvalResult run_eval(const SimConfig& cfg, const RawPolicy& policy, std::uint64_t seed, const RunOptions& opt) {
  std::optional<SlotCsv> slots;
  std::optional<QueueCsv> queues;
  if (opt.out_dir && opt.slot_metrics) {
    slots.emplace(*opt.out_dir / "eval_slots.csv");
    queues.emplace(*opt.out_dir / "queues.csv");
  }
  return evaluate(cfg, policy, seed, cfg.eval_slots, {slots ? &*slots : nullptr, queues ? &*queues : nullptr});
}

void fill_eval(RunRecord& rec, const EvalResult& ev) {
  rec.eval_cost = ev.episode_costs.empty() ? kNaN : stats::mean(ev.episode_costs);
  rec.stability = ev.stability;
}

}  // namespace

RunResult run_training(const SimConfig& cfg, std::uint64_t seed, const RunOptions& opt) {
  validate_config(cfg);
  if (!scheme_spec(cfg.scheme).learns) throw std::invalid_argument(to_string(cfg.scheme) + " does not learn");
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  RunRecord& rec = res.record;
  rec.config_hash = hash_hex(config_hash(cfg));
  rec.seed = seed;
  rec.scheme = to_string(cfg.scheme);
  rec.stability = nan_stability();
  rec.eval_cost = kNaN;

  std::optional<SlotCsv> slot_csv;
  if (opt.out_dir) {
    fs::create_directories(*opt.out_dir);
    if (opt.slot_metrics) slot_csv.emplace(*opt.out_dir / "slots.csv");
  }
  SlotSink sink;
  if (slot_csv) sink = [&](std::size_t w, const SlotMetrics& m) { slot_csv->write(w, m); };

  try {
    res.training = opt.sync ? train_sync(cfg, seed, sink) : train_async(cfg, seed, sink);
  } catch (const std::exception& e) {
    if (opt.out_dir) {
      json err{{"error", e.what()}, {"config_hash", rec.config_hash}, {"seed", seed}};
      write_text(*opt.out_dir / "summary.json", err.dump(2) + "\n");
    }
    throw;
  }
  const auto& tr = *res.training;
  std::vector<double> ees;
  for (const auto& e : tr.episodes) {
    rec.episode_costs.push_back(e.cost);
    ees.push_back(e.ee);
  }
  rec.final_cost = tail_mean(rec.episode_costs);
  rec.final_ee = tail_mean(ees);
  rec.updates = tr.updates_applied;
  rec.steps = tr.steps;

  std::optional<EvalResult> ev;
  if (cfg.eval_slots > 0) {
    ev = run_eval(cfg, make_policy(cfg.scheme, &tr.actor), seed, opt);
    fill_eval(rec, *ev);
  }
  rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (opt.out_dir) {
    Checkpoint ck{tr.actor, tr.critic, {seed}, config_hash(cfg), tr.steps, tr.updates_applied};
    save_checkpoint(*opt.out_dir / "checkpoint.bin", ck);
    write_episodes_csv(*opt.out_dir / "episodes.csv", tr.episodes);
    write_common_artifacts(*opt.out_dir, cfg, rec, ev ? &*ev : nullptr);
  }
  return res;
}

RunResult run_baseline(const SimConfig& cfg_in, Scheme scheme, std::uint64_t seed, const RunOptions& opt) {
  SimConfig cfg = cfg_in;
  cfg.scheme = scheme;
  validate_config(cfg);
  if (scheme_spec(scheme).learns) throw std::invalid_argument(to_string(scheme) + " is a learned scheme");
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  RunRecord& rec = res.record;
  rec.config_hash = hash_hex(config_hash(cfg));
  rec.seed = seed;
  rec.scheme = to_string(scheme);
  const auto ev = run_eval(cfg, make_policy(scheme, nullptr, opt.greedy), seed, opt);
  rec.episode_costs = ev.episode_costs;
  rec.final_cost = tail_mean(rec.episode_costs);
  rec.final_ee = ev.ee;
  fill_eval(rec, ev);
  rec.steps = cfg.eval_slots;
  rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opt.out_dir) {
    std::vector<EpisodeRecord> eps;
    for (std::size_t k = 0; k < ev.episode_costs.size(); ++k) eps.push_back({0, k, ev.episode_costs[k], kNaN, kNaN});
    write_episodes_csv(*opt.out_dir / "episodes.csv", eps);
    write_common_artifacts(*opt.out_dir, cfg, rec, &ev);
  }
  return res;
}

RunResult run_scheme(const SimConfig& cfg, std::uint64_t seed, const RunOptions& opt) {
  return scheme_spec(cfg.scheme).learns ? run_training(cfg, seed, opt) : run_baseline(cfg, cfg.scheme, seed, opt);
}

// ---- sweeps -------------------------------------------------------------------

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "N") return SweepAxis::num_devices;
  if (s == "M") return SweepAxis::num_small_cells;
  if (s == "learning_rate") return SweepAxis::learning_rate;
  if (s == "V") return SweepAxis::v_weight;
  throw std::invalid_argument("unknown sweep axis '" + s + "' (expected N, M, learning_rate or V)");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::num_devices: return "N";
    case SweepAxis::num_small_cells: return "M";
    case SweepAxis::learning_rate: return "learning_rate";
    case SweepAxis::v_weight: return "V";
  }
  return "?";
}

void apply_axis(SimConfig& cfg, SweepAxis axis, double value) {
  auto as_count = [&](double v) {
    if (v < 0.0 || v != std::floor(v)) throw std::invalid_argument("sweep value " + fmt(v) + " is not a count");
    return static_cast<std::size_t>(v);
  };
  switch (axis) {
    case SweepAxis::num_devices: cfg.net.num_devices = as_count(value); break;
    case SweepAxis::num_small_cells:
      cfg.net.num_small_cells = as_count(value);
      if (cfg.net.layout == SmallCellLayout::explicit_positions)
        throw std::invalid_argument("cannot sweep M with explicit small-cell positions");
      break;
    case SweepAxis::learning_rate:
      cfg.training.lr_actor = value;
      cfg.training.lr_critic = value;
      break;
    case SweepAxis::v_weight: cfg.lyapunov.v_weight = value; break;
  }
  validate_config(cfg);
}

std::vector<SweepRow> sweep(const SimConfig& base, SweepAxis axis, const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, const std::vector<Scheme>& schemes,
                            const SweepOptions& opt) {
  std::vector<SweepRow> rows;
  std::vector<SimConfig> cfgs;
  std::vector<std::uint64_t> cell_seeds;
  for (double v : values)
    for (auto s : schemes)
      for (auto seed : seeds) {
        SimConfig c = base;
        apply_axis(c, axis, v);
        c.scheme = s;
        cfgs.push_back(c);
        cell_seeds.push_back(seed);
        rows.push_back({axis, v, to_string(s), {}});
      }

  RunOptions run = opt.run;
  run.out_dir.reset();
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(rows.size());
  auto work = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      try {
        rows[k].record = run_scheme(cfgs[k], cell_seeds[k], run).record;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto jobs = std::max<std::size_t>(1, std::min(opt.jobs, rows.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (rows.size() != values.size() * seeds.size() * schemes.size())
    throw std::logic_error("sweep table is not a full cross-product");
  return rows;
}

void write_sweep_csv(const fs::path& path, const std::vector<SweepRow>& rows) {
  auto os = open_out(path);
  os << "axis,value,scheme,seed,config_hash,episodes,final_cost,final_ee,eval_cost,slope,slope_ci_low,"
        "slope_ci_high,updates,steps\n";
  for (const auto& r : rows) {
    const auto& c = r.record;
    os << to_string(r.axis) << ',' << fmt(r.value) << ',' << r.scheme << ',' << c.seed << ',' << c.config_hash << ','
       << c.episode_costs.size() << ',' << fmt(c.final_cost) << ',' << fmt(c.final_ee) << ',' << fmt(c.eval_cost)
       << ',' << fmt(c.stability.slope) << ',' << fmt(c.stability.ci_low) << ',' << fmt(c.stability.ci_high) << ','
       << c.updates << ',' << c.steps << '\n';
  }
}

std::vector<std::pair<double, double>> seed_averaged(const std::vector<SweepRow>& rows, const std::string& scheme) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& r : rows) {
    if (r.scheme != scheme) continue;
    auto& a = acc[r.value];
    a.first += r.record.final_cost;
    ++a.second;
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [x, a] : acc) out.emplace_back(x, a.first / static_cast<double>(a.second));
  return out;
}

void write_plot_data(const fs::path& path, const std::vector<SweepRow>& rows) {
  auto os = open_out(path);
  os << "x,y,series\n";
  std::vector<std::string> schemes;
  for (const auto& r : rows)
    if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) schemes.push_back(r.scheme);
  for (const auto& s : schemes)
    for (const auto& [x, y] : seed_averaged(rows, s)) os << fmt(x) << ',' << fmt(y) << ',' << s << '\n';
}

}  // namespace dtwin
