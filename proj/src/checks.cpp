#include "dtwin/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "dtwin/a3c.hpp"
#include "dtwin/baselines.hpp"
#include "dtwin/env.hpp"
#include "dtwin/harness.hpp"
#include "dtwin/schemes.hpp"

namespace dtwin {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Uniform raw action with a share of coordinates pinned to the box corners.
std::vector<double> stress_raw_action(const ActionLayout& lay, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(lay.size());
  for (auto& v : u) {
    const double r = unif(rng);
    v = r < 0.1 ? 0.0 : r < 0.2 ? 1.0 : unif(rng);
  }
  return u;
}

double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  return d == 0.0 ? 0.0 : d / std::max(std::abs(a), std::abs(b));
}

std::string first_line(const std::ostringstream& os, const std::string& fallback) {
  return os.str().empty() ? fallback : os.str();
}

}  // namespace

CheckResult check_queue_oracle(const SimConfig& cfg, std::uint64_t seed, std::size_t slots) {
  const auto t0 = Clock::now();
  CheckResult r{"queue dynamics oracle", true, "", 0.0};
  Env env(cfg, derive_seed(seed, 7, 1));
  Rng rng(derive_seed(seed, 7, 2));
  const auto& ec = cfg.energy;
  const double alpha = cfg.net.path_loss_exp;
  std::size_t queue_mismatch = 0, energy_mismatch = 0;
  double worst_energy = 0.0;
  std::ostringstream first;

  for (std::size_t s = 0; s < slots; ++s) {
    const Topology topo = env.topology();
    const ChannelRealization ch = env.channel();
    const QueueState q = env.queues();
    const std::vector<double> lam = env.arrivals();
    const auto a = env.project(stress_raw_action(env.action_layout(), rng));
    const auto res = env.step(a);
    const auto n = topo.num_devices();
    const auto m1 = topo.num_stations();

    std::vector<double> ql(n), qe(m1), el(n), ee(n), inflow(m1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = topo.association[i];
      const auto ri = static_cast<Eigen::Index>(i), rj = static_cast<Eigen::Index>(j);
      double interf = 0.0;
      if (j != 0)
        for (std::size_t k = 0; k < n; ++k) {
          const auto jk = topo.association[k];
          if (k == i || jk == 0 || jk == j) continue;
          const auto rk = static_cast<Eigen::Index>(k);
          interf += a.power[k] * (ch.gains(rk, rj) * std::pow(ch.distances(rk, rj), -alpha));
        }
      const double w = a.bandwidth(ri, rj), p = a.power[i];
      double rate = 0.0;
      if (w > 0.0 && p > 0.0)
        rate = w * std::log2(1.0 + p * ch.gains(ri, rj) * std::pow(ch.distances(ri, rj), -alpha) /
                                       (cfg.net.noise_power + interf));
      const double d_local = std::min(ec.slot_len * a.local_compute[i] / ec.cycles_per_bit, std::max(q.local[i], 0.0));
      const double exec = ec.slot_len * a.edge_compute(ri, rj) / ec.cycles_per_bit;
      const double d_off = std::min({rate * ec.slot_len, std::max(q.local[i] - d_local, 0.0), exec});
      ql[i] = std::max(q.local[i] - (d_local + d_off), 0.0) + lam[i];
      inflow[j] += d_off;
      el[i] = ec.switched_cap * ec.slot_len * a.local_compute[i] * a.local_compute[i] * a.local_compute[i];
      ee[i] = p * ec.slot_len;
      if (d_off > 0.0) ee[i] += d_off * ec.cycles_per_bit / a.edge_compute(ri, rj) * ec.edge_energy_coeff;
    }
    for (std::size_t j = 0; j < m1; ++j) {
      const double psi = std::min(a.edge_departure[j], q.edge[j]);
      qe[j] = std::max(q.edge[j] - psi, 0.0) + inflow[j];
    }

    const auto& nq = res.outcome.next_queues;
    for (std::size_t i = 0; i < n; ++i)
      if (nq.local[i] != ql[i]) {
        if (queue_mismatch++ == 0)
          first << "slot " << s << " device " << i << ": " << fmt(nq.local[i]) << " vs " << fmt(ql[i]);
      }
    for (std::size_t j = 0; j < m1; ++j)
      if (nq.edge[j] != qe[j]) {
        if (queue_mismatch++ == 0)
          first << "slot " << s << " station " << j << ": " << fmt(nq.edge[j]) << " vs " << fmt(qe[j]);
      }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<Eigen::Index>(topo.association[i]);
      const double e1 = rel_err(res.outcome.energy.local[i], el[i]);
      const double e2 = rel_err(res.outcome.energy.edge(static_cast<Eigen::Index>(i), j), ee[i]);
      worst_energy = std::max({worst_energy, e1, e2});
      total += el[i] + ee[i];
    }
    worst_energy = std::max(worst_energy, rel_err(res.outcome.energy.total, total));
    if (worst_energy > 1e-12 && energy_mismatch++ == 0 && first.str().empty())
      first << "slot " << s << ": energy relative error " << worst_energy;
  }
  r.passed = queue_mismatch == 0 && worst_energy <= 1e-12;
  r.seconds = since(t0);
  std::ostringstream d;
  d << slots << " slots, queue mismatches " << queue_mismatch << ", worst energy rel err " << worst_energy;
  if (!r.passed) d << "; first: " << first_line(first, "-");
  r.detail = d.str();
  return r;
}

CheckResult check_reward_identity(const SimConfig& cfg, std::uint64_t seed, std::size_t slots) {
  const auto t0 = Clock::now();
  CheckResult r{"reward identity", true, "", 0.0};
  Env env(cfg, derive_seed(seed, 8, 1));
  Rng rng(derive_seed(seed, 8, 2));
  const double v = cfg.lyapunov.v_weight;
  double worst = 0.0;
  std::size_t exact_fail = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    const QueueState q = env.queues();
    const std::vector<double> lam = env.arrivals();
    const std::vector<double> beta = env.perturbation().beta;
    const auto res = env.step(env.project(stress_raw_action(env.action_layout(), rng)));
    const auto& f = res.outcome.flows;
    const double e = res.outcome.energy.total;
    double bits = 0.0;
    for (double d : f.d_local) bits += d;
    for (Eigen::Index i = 0; i < f.d_offload.rows(); ++i)
      for (Eigen::Index j = 0; j < f.d_offload.cols(); ++j) bits += f.d_offload(i, j);
    const double eta = bits > 0.0 ? e / bits : 0.0;
    const double penalty = v * (e - eta * bits);
    double edge = 0.0, local = 0.0;
    for (std::size_t j = 0; j < q.edge.size(); ++j) {
      double in = 0.0;
      for (Eigen::Index i = 0; i < f.d_offload.rows(); ++i) in += f.d_offload(i, static_cast<Eigen::Index>(j));
      edge += q.edge[j] * (in - f.psi_edge[j]);
    }
    for (std::size_t i = 0; i < q.local.size(); ++i)
      local -= (q.local[i] - beta[i]) * (f.d_local[i] + f.d_offload.row(static_cast<Eigen::Index>(i)).sum() - lam[i]);
    const double obj = penalty + edge + local;
    const double scale = std::max({std::abs(penalty) + std::abs(edge) + std::abs(local), 1.0});
    worst = std::max(worst, std::abs(res.reward + obj) / scale);
    if (res.reward + res.outcome.objective.total != 0.0) ++exact_fail;
  }
  r.passed = worst <= 1e-9 && exact_fail == 0;
  r.seconds = since(t0);
  std::ostringstream d;
  d << slots << " slots, worst |reward + objective| / term scale " << worst << ", reported-objective mismatches "
    << exact_fail;
  r.detail = d.str();
  return r;
}

CheckResult check_drift_bound(const SimConfig& cfg, std::uint64_t seed, std::size_t slots) {
  const auto t0 = Clock::now();
  CheckResult r{"drift-plus-penalty bound", true, "", 0.0};
  Env env(cfg, derive_seed(seed, 9, 1));
  Rng rng(derive_seed(seed, 9, 2));
  std::size_t violations = 0, cap_violations = 0;
  double tightest = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < slots; ++s) {
    const auto bounds = env.drift_bounds();
    const std::vector<double> lam = env.arrivals();
    const auto res = env.step(env.project(stress_raw_action(env.action_layout(), rng)));
    const auto& f = res.outcome.flows;
    if (res.metrics.drift_lhs > res.metrics.drift_rhs) ++violations;
    tightest = std::max(tightest, (res.metrics.drift_lhs - res.metrics.drift_rhs) / std::abs(res.metrics.drift_rhs));
    for (std::size_t i = 0; i < f.psi_device.size(); ++i) {
      if (f.psi_device[i] > bounds.psi_device_max[i] || lam[i] > bounds.arrival_max[i]) ++cap_violations;
      for (Eigen::Index j = 0; j < f.d_offload.cols(); ++j)
        if (f.d_offload(static_cast<Eigen::Index>(i), j) > bounds.offload_max(static_cast<Eigen::Index>(i), j))
          ++cap_violations;
    }
    for (std::size_t j = 0; j < f.psi_edge.size(); ++j)
      if (f.psi_edge[j] > bounds.psi_edge_max[j]) ++cap_violations;
  }
  r.passed = violations == 0 && cap_violations == 0;
  r.seconds = since(t0);
  std::ostringstream d;
  d << slots << " slots, bound violations " << violations << ", cap violations " << cap_violations
    << ", max (lhs - rhs)/|rhs| " << tightest;
  r.detail = d.str();
  return r;
}

namespace {

struct GradAudit {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;
};

Trajectory random_trajectory(std::size_t state_dim, std::size_t action_dim, std::size_t len, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Trajectory t;
  for (std::size_t k = 0; k < len; ++k) {
    Transition tr;
    tr.state = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(state_dim), [&] { return g(rng); });
    tr.pre_squash = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(action_dim), [&] { return g(rng); });
    tr.target = g(rng);
    t.steps.push_back(tr);
  }
  return t;
}

void audit(double analytic, double fd, GradAudit& a) {
  const double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-5});
  ++a.checked;
  a.worst = std::max(a.worst, err);
  if (err > 1e-4) ++a.failed;
}

// Coordinates to probe: all of them, or `count` spread over every block.
std::vector<std::size_t> probe_coords(const std::vector<std::size_t>& block_sizes, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  std::size_t offset = 0, total = 0;
  for (auto b : block_sizes) total += b;
  const bool all = count == 0 || count >= total;
  for (auto b : block_sizes) {
    if (all) {
      for (std::size_t k = 0; k < b; ++k) out.push_back(offset + k);
    } else {
      const auto take = std::max<std::size_t>(1, count / block_sizes.size());
      std::uniform_int_distribution<std::size_t> pick(0, b - 1);
      for (std::size_t k = 0; k < take; ++k) out.push_back(offset + pick(rng));
    }
    offset += b;
  }
  return out;
}

std::vector<std::size_t> mlp_blocks(const MlpParams& p) {
  std::vector<std::size_t> b;
  for (const auto& l : p.layers) {
    b.push_back(static_cast<std::size_t>(l.weight.size()));
    b.push_back(static_cast<std::size_t>(l.bias.size()));
  }
  return b;
}

void gradient_audit(std::size_t state_dim, std::size_t action_dim, const std::vector<std::size_t>& hidden,
                    std::size_t coords, Rng& rng, GradAudit& out) {
  ActorParams actor = ActorParams::init(state_dim, action_dim, hidden, -0.5, rng);
  CriticParams critic = CriticParams::init(state_dim, hidden, rng);
  std::uniform_real_distribution<double> ls(-1.0, 0.5);
  for (Eigen::Index k = 0; k < actor.log_std.size(); ++k) actor.log_std(k) = ls(rng);
  auto traj = random_trajectory(state_dim, action_dim, 6, rng);
  GradientSettings gs{0.01, {}};
  auto acc = GradAccum::zeros_like(actor, critic);
  accumulate_gradients(traj, actor, critic, gs, acc);
  const double h = 1e-6;

  auto ablocks = mlp_blocks(actor.net);
  ablocks.push_back(actor.action_dim());
  auto ag = acc.d_actor;
  for (auto idx : probe_coords(ablocks, coords, rng)) {
    double& c = actor.coefficient(idx);
    const double keep = c;
    c = keep + h;
    const double up = actor_surrogate(traj, actor, critic, gs);
    c = keep - h;
    const double down = actor_surrogate(traj, actor, critic, gs);
    c = keep;
    audit(ag.coefficient(idx), (up - down) / (2 * h), out);
  }
  auto cg = acc.d_critic;
  for (auto idx : probe_coords(mlp_blocks(critic.net), coords, rng)) {
    double& c = critic.net.coefficient(idx);
    const double keep = c;
    c = keep + h;
    const double up = critic_surrogate(traj, critic);
    c = keep - h;
    const double down = critic_surrogate(traj, critic);
    c = keep;
    audit(cg.net.coefficient(idx), (up - down) / (2 * h), out);
  }
}

}  // namespace

CheckResult check_gradients(const SimConfig& cfg, std::uint64_t seed, std::size_t full_coords) {
  const auto t0 = Clock::now();
  CheckResult r{"gradient check", true, "", 0.0};
  Rng rng(derive_seed(seed, 10, 1));
  GradAudit small, full;
  gradient_audit(5, 3, {2, 2, 2}, 0, rng, small);
  const auto n = cfg.net.num_devices, m1 = cfg.net.num_small_cells + 1;
  gradient_audit(StateVector::dimension(n, m1), ActionLayout{n, m1}.size(), cfg.training.hidden, full_coords, rng,
                 full);
  r.passed = small.failed == 0 && full.failed == 0;
  r.seconds = since(t0);
  std::ostringstream d;
  d << "2-unit net: " << small.checked << " coords, " << small.failed << " failed, worst rel " << small.worst
    << "; full net: " << full.checked << " coords, " << full.failed << " failed, worst rel " << full.worst;
  r.detail = d.str();
  return r;
}

CheckResult check_feasibility(const SimConfig& cfg, std::uint64_t seed, std::size_t samples) {
  const auto t0 = Clock::now();
  CheckResult r{"projection feasibility", true, "", 0.0};
  std::ostringstream d;
  std::size_t total_fail = 0;
  for (auto scheme : {Scheme::joint, Scheme::no_compute_alloc, Scheme::no_radio_alloc}) {
    SimConfig c = cfg;
    c.scheme = scheme;
    Env env(c, derive_seed(seed, 11, static_cast<std::uint64_t>(scheme)));
    Rng rng(derive_seed(seed, 11, 100 + static_cast<std::uint64_t>(scheme)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t fails = 0;
    std::string first;
    for (std::size_t s = 0; s < samples; ++s) {
      if (s % 1000 == 0) {
        env.reset();
        auto q = env.queues();
        const double scale = 1e7 * unif(rng);
        for (auto& v : q.local) v = unif(rng) < 0.2 ? 0.0 : scale * unif(rng);
        for (auto& v : q.edge) v = unif(rng) < 0.2 ? 0.0 : scale * unif(rng);
        env.set_queues(q);
      }
      auto u = stress_raw_action(env.action_layout(), rng);
      apply_scheme_mask(scheme, u, env.topology());
      const auto rep = check_feasible(env.project(u), env.topology(), env.queues(), c.energy, 1e-9);
      if (!rep.feasible && fails++ == 0) first = rep.first_violation;
    }
    d << to_string(scheme) << ": " << fails << "/" << samples << " infeasible";
    if (fails) d << " (" << first << ")";
    d << "; ";
    total_fail += fails;
  }
  r.passed = total_fail == 0;
  r.seconds = since(t0);
  r.detail = d.str();
  return r;
}

CheckResult check_async_replay(const SimConfig& cfg, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r{"async replay", true, "", 0.0};
  SimConfig c = cfg;
  c.training.workers = 1;
  const auto a = train_async(c, seed);
  const auto s = train_sync(c, seed);
  const bool actor_eq = a.actor.flatten() == s.actor.flatten();
  const bool critic_eq = a.critic.net.flatten() == s.critic.net.flatten();
  bool episodes_eq = a.episodes.size() == s.episodes.size();
  for (std::size_t k = 0; episodes_eq && k < a.episodes.size(); ++k)
    episodes_eq = a.episodes[k].cost == s.episodes[k].cost && a.episodes[k].ee == s.episodes[k].ee;
  r.passed = actor_eq && critic_eq && episodes_eq && a.updates_applied == s.updates_applied && a.steps == s.steps;
  r.seconds = since(t0);
  std::ostringstream d;
  d << "updates " << a.updates_applied << "/" << s.updates_applied << ", steps " << a.steps << "/" << s.steps
    << ", episodes " << a.episodes.size() << ", actor " << (actor_eq ? "identical" : "differs") << ", critic "
    << (critic_eq ? "identical" : "differs") << ", episode costs " << (episodes_eq ? "identical" : "differ");
  r.detail = d.str();
  return r;
}

double total_service_capacity(const SimConfig& cfg, std::uint64_t seed, std::size_t samples) {
  Env env(cfg, derive_seed(seed, 12, 1));
  const auto& ec = cfg.energy;
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto st = env.state();
    const auto& topo = env.topology();
    double cap = 0.0;
    for (const auto& d : topo.devices) cap += ec.slot_len * d.f_local / ec.cycles_per_bit;
    for (std::size_t j = 0; j < topo.num_stations(); ++j) {
      double up = 0.0;
      for (std::size_t i = 0; i < topo.num_devices(); ++i)
        up += st.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * ec.slot_len;
      cap += std::min(up, topo.stations[j].f_edge * ec.slot_len / ec.cycles_per_bit);
    }
    total += cap;
    env.step(Action::zeros(topo.num_devices(), topo.num_stations()));
  }
  return total / static_cast<double>(samples);
}

CheckResult check_stability_witness(const SimConfig& cfg, std::uint64_t seed, std::size_t slots) {
  const auto t0 = Clock::now();
  CheckResult r{"stability witness", true, "", 0.0};
  SimConfig c = cfg;
  c.scheme = Scheme::greedy_drift;
  c.training.episode_len = slots;
  const double cap = total_service_capacity(c, seed);
  c.arrivals.mean_bits = 0.5 * cap / static_cast<double>(c.net.num_devices);
  const auto ev = evaluate(c, make_policy(Scheme::greedy_drift), seed, slots);
  const auto& st = ev.stability;
  r.passed = ev.infeasible == 0 && st.ci_contains_zero();
  r.seconds = since(t0);
  std::ostringstream d;
  d << "capacity " << fmt(cap) << " bits/slot, lambda " << fmt(c.arrivals.mean_bits) << " per device, mean backlog "
    << fmt(st.mean_local + st.mean_edge) << ", slope " << st.slope << " CI [" << st.ci_low << ", " << st.ci_high << "]";
  r.detail = d.str();
  return r;
}

std::vector<CheckResult> run_invariant_suite(const SimConfig& cfg, std::uint64_t seed) {
  SimConfig replay = cfg;
  replay.training.total_steps = std::min<std::uint64_t>(cfg.training.total_steps, 2000);
  replay.training.episode_len = std::min<std::size_t>(cfg.training.episode_len, 100);
  return {check_queue_oracle(cfg, seed),   check_reward_identity(cfg, seed), check_drift_bound(cfg, seed),
          check_gradients(cfg, seed),      check_feasibility(cfg, seed),     check_async_replay(replay, seed),
          check_stability_witness(cfg, seed)};
}

}  // namespace dtwin
