// Acceptance suite: one PASS/FAIL line per criterion.
// Criteria 1-7 gate the exit status; 8-11 are trend verdicts at desk scale.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dtwin/checks.hpp"
#include "dtwin/harness.hpp"
#include "dtwin/stats.hpp"

using namespace dtwin;
using nlohmann::json;

namespace {

std::uint64_t env_u64(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  return v ? std::strtoull(v, nullptr, 10) : fallback;
}

struct Verdict {
  int id;
  bool passed;
  std::string detail;
};

std::vector<Verdict> verdicts;
json report = json::object();

void emit(int id, bool passed, const std::string& detail) {
  verdicts.push_back({id, passed, detail});
  std::cout << (passed ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

void from_check(int id, const CheckResult& r, double limit_s = 0.0) {
  bool ok = r.passed;
  std::ostringstream d;
  d << r.name << " " << r.detail << " (" << r.seconds << " s";
  if (limit_s > 0.0) {
    d << ", limit " << limit_s << " s";
    ok = ok && r.seconds < limit_s;
  }
  d << ")";
  emit(id, ok, d.str());
}

std::string join(const std::vector<std::pair<double, double>>& xs) {
  std::ostringstream os;
  for (const auto& [x, y] : xs) os << " " << x << ":" << fmt(y);
  return os.str();
}

std::vector<double> costs_of(const std::vector<SweepRow>& rows, const std::string& scheme, double value) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.scheme == scheme && r.value == value) out.push_back(r.record.final_cost);
  return out;
}

json rows_json(const std::vector<SweepRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"value", r.value}, {"scheme", r.scheme}, {"seed", r.record.seed},
                 {"final_cost", r.record.final_cost}, {"episodes", r.record.episode_costs.size()}});
  return a;
}

}  // namespace

int main() {
  SimConfig ref;  // N=20, M=3 reference setting
  const std::uint64_t seed = 1;

  from_check(1, check_queue_oracle(ref, seed, 1000), 10.0);
  from_check(2, check_reward_identity(ref, seed, 10000));
  from_check(3, check_drift_bound(ref, seed, 10000));
  from_check(4, check_gradients(ref, seed, 100), 60.0);
  from_check(5, check_feasibility(ref, seed, 100000));
  SimConfig replay = ref;
  replay.training.total_steps = 4000;
  from_check(6, check_async_replay(replay, seed));
  from_check(7, check_stability_witness(ref, seed, 10000), 120.0);

  // Trend criteria. Budget per run and seed counts can be raised through the environment.
  const auto steps = env_u64("DTWIN_ACCEPT_STEPS", 20000);
  const auto n_seeds8 = std::max<std::uint64_t>(5, env_u64("DTWIN_ACCEPT_SEEDS", 5));
  const auto n_trend = std::min(n_seeds8, env_u64("DTWIN_ACCEPT_TREND_SEEDS", 3));
  std::vector<std::uint64_t> seeds8, seeds_trend;
  for (std::uint64_t s = 1; s <= n_seeds8; ++s) seeds8.push_back(s);
  for (std::uint64_t s = 1; s <= n_trend; ++s) seeds_trend.push_back(s);

  SimConfig base = ref;
  base.training.total_steps = steps;
  base.eval_slots = 0;
  SweepOptions opt;
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  opt.run.slot_metrics = false;
  const std::vector<Scheme> schemes = {Scheme::joint, Scheme::no_compute_alloc, Scheme::no_radio_alloc};
  report["steps_per_run"] = steps;
  const auto t0 = std::chrono::steady_clock::now();

  // 8: scheme ordering at the reference setting.
  const auto rows8 = sweep(base, SweepAxis::num_devices, {20}, seeds8, schemes, opt);
  report["criterion8"] = rows_json(rows8);
  {
    const auto j = costs_of(rows8, "joint", 20), nc = costs_of(rows8, "no-compute-alloc", 20),
               nr = costs_of(rows8, "no-radio-alloc", 20);
    const double mj = stats::mean(j), mc = stats::mean(nc), mr = stats::mean(nr);
    const auto& worst = mc > mr ? nc : nr;
    const auto t = stats::paired_t_test(j, worst);
    const bool order = mj < mc && mc < mr;
    std::ostringstream d;
    d << "mean cost joint " << fmt(mj) << ", no-compute-alloc " << fmt(mc) << ", no-radio-alloc " << fmt(mr)
      << "; joint vs " << (mc > mr ? "no-compute-alloc" : "no-radio-alloc") << " one-sided p " << t.p_less
      << " over " << j.size() << " seeds";
    emit(8, order && t.p_less < 0.05, d.str());
  }

  // 9: cost against N, reusing the N=20 cells of criterion 8.
  std::vector<SweepRow> rows9 = sweep(base, SweepAxis::num_devices, {10, 30, 40}, seeds_trend, schemes, opt);
  for (const auto& r : rows8)
    if (std::find(seeds_trend.begin(), seeds_trend.end(), r.record.seed) != seeds_trend.end()) rows9.push_back(r);
  report["criterion9"] = rows_json(rows9);
  {
    bool ok = true;
    std::ostringstream d;
    for (auto s : schemes) {
      const auto curve = seed_averaged(rows9, to_string(s));
      std::vector<double> xs, ys;
      for (const auto& [x, y] : curve) xs.push_back(x), ys.push_back(y);
      const double rho = stats::spearman(xs, ys);
      ok = ok && rho >= 0.8;
      d << to_string(s) << " rho " << rho << " [" << join(curve) << " ] ";
    }
    emit(9, ok, d.str());
  }

  // 10: cost against M for the joint scheme at N=40 and N=20.
  auto cost_vs_m = [&](std::size_t n, const std::vector<SweepRow>& reuse) {
    SimConfig c = base;
    c.net.num_devices = n;
    auto rows = sweep(c, SweepAxis::num_small_cells, {2, 4}, seeds_trend, {Scheme::joint}, opt);
    for (const auto& r : reuse)
      if (r.scheme == "joint" && r.value == static_cast<double>(n) &&
          std::find(seeds_trend.begin(), seeds_trend.end(), r.record.seed) != seeds_trend.end()) {
        auto m3 = r;
        m3.axis = SweepAxis::num_small_cells;
        m3.value = 3;
        rows.push_back(m3);
      }
    return rows;
  };
  {
    const auto r40 = cost_vs_m(40, rows9);
    const auto r20 = cost_vs_m(20, rows9);
    report["criterion10"] = {{"N40", rows_json(r40)}, {"N20", rows_json(r20)}};
    const auto c40 = seed_averaged(r40, "joint");
    const auto c20 = seed_averaged(r20, "joint");
    const bool dec40 = c40.size() == 3 && c40[0].second > c40[1].second && c40[1].second > c40[2].second;
    const double rel40 = (c40.back().second - c40.front().second) / c40.front().second;
    const double rel20 = (c20.back().second - c20.front().second) / c20.front().second;
    std::ostringstream d;
    d << "N=40 [" << join(c40) << " ] relative change " << rel40 << "; N=20 [" << join(c20) << " ] relative change "
      << rel20;
    emit(10, dec40 && std::abs(rel20) < std::abs(rel40), d.str());
  }

  // 11: learning rate, reusing the 1e-3 cells of criterion 8.
  {
    auto rows = sweep(base, SweepAxis::learning_rate, {1e-2, 1e-4}, seeds_trend, {Scheme::joint}, opt);
    for (const auto& r : rows8)
      if (r.scheme == "joint" && std::find(seeds_trend.begin(), seeds_trend.end(), r.record.seed) != seeds_trend.end()) {
        auto lr = r;
        lr.axis = SweepAxis::learning_rate;
        lr.value = base.training.lr_actor;
        rows.push_back(lr);
      }
    report["criterion11"] = rows_json(rows);
    const auto curve = seed_averaged(rows, "joint");
    const auto best = std::min_element(curve.begin(), curve.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    std::ostringstream d;
    d << "seed-averaged cost by rate [" << join(curve) << " ], best " << best->first;
    emit(11, best->first == 1e-3, d.str());
  }
  report["trend_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool gate = true;
  int passed = 0;
  json v = json::array();
  for (const auto& x : verdicts) {
    if (x.id <= 7) gate = gate && x.passed;
    passed += x.passed;
    v.push_back({{"criterion", x.id}, {"passed", x.passed}, {"detail", x.detail}});
  }
  report["verdicts"] = v;
  std::ofstream("acceptance_report.json") << report.dump(2) << "\n";
  std::cout << passed << "/" << verdicts.size() << " criteria passed; hard gate (1-7) "
            << (gate ? "passed" : "failed") << std::endl;
  return gate ? 0 : 1;
}
