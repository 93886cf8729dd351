#include "dtwin/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dtwin {

Action Action::zeros(std::size_t n, std::size_t m_plus_1) {
  const auto rn = static_cast<Eigen::Index>(n);
  const auto rm = static_cast<Eigen::Index>(m_plus_1);
  Action a;
  a.bandwidth = Eigen::MatrixXd::Zero(rn, rm);
  a.power.assign(n, 0.0);
  a.edge_departure.assign(m_plus_1, 0.0);
  a.local_compute.assign(n, 0.0);
  a.edge_compute = Eigen::MatrixXd::Zero(rn, rm);
  return a;
}

// ---- state -----------------------------------------------------------------

std::size_t StateVector::dimension(std::size_t n, std::size_t m1) {
  return n * m1 + (n + m1) + n + m1 + n + m1;
}

std::vector<double> StateVector::flatten() const {
  const auto n = static_cast<std::size_t>(rates.rows());
  const auto m1 = static_cast<std::size_t>(rates.cols());
  std::vector<double> out;
  out.reserve(dimension(n, m1));
  for (Eigen::Index i = 0; i < rates.rows(); ++i)
    for (Eigen::Index j = 0; j < rates.cols(); ++j) out.push_back(rates(i, j));
  out.insert(out.end(), capacities.begin(), capacities.end());
  out.insert(out.end(), p_max.begin(), p_max.end());
  out.insert(out.end(), bandwidth.begin(), bandwidth.end());
  out.insert(out.end(), queues.local.begin(), queues.local.end());
  out.insert(out.end(), queues.edge.begin(), queues.edge.end());
  return out;
}

StateVector StateVector::unflatten(std::size_t n, std::size_t m1, std::span<const double> flat) {
  if (flat.size() != dimension(n, m1))
    throw std::invalid_argument("flat state has the wrong dimension for (N, M)");
  StateVector s;
  auto it = flat.begin();
  auto take = [&](std::size_t k) {
    std::vector<double> v(it, it + static_cast<std::ptrdiff_t>(k));
    it += static_cast<std::ptrdiff_t>(k);
    return v;
  };
  s.rates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m1));
  for (Eigen::Index i = 0; i < s.rates.rows(); ++i)
    for (Eigen::Index j = 0; j < s.rates.cols(); ++j) s.rates(i, j) = *it++;
  s.capacities = take(n + m1);
  s.p_max = take(n);
  s.bandwidth = take(m1);
  s.queues.local = take(n);
  s.queues.edge = take(m1);
  return s;
}

StateNormalizer StateNormalizer::from_config(const SimConfig& cfg) {
  StateNormalizer s;
  const double lambda = std::max(cfg.arrivals.mean_bits, 1.0);
  s.rate_scale = lambda / cfg.energy.slot_len;
  s.f_local = cfg.net.f_local;
  s.f_edge_small = cfg.net.f_edge_small;
  s.f_edge_macro = cfg.net.f_edge_macro;
  s.p_max = cfg.net.p_max;
  s.bandwidth_small = cfg.net.bandwidth_small;
  s.bandwidth_macro = cfg.net.bandwidth_macro;
  s.queue_scale = 10.0 * lambda;
  return s;
}

Eigen::VectorXd StateNormalizer::features(const StateVector& s) const {
  const auto n = static_cast<std::size_t>(s.rates.rows());
  const auto m1 = static_cast<std::size_t>(s.rates.cols());
  Eigen::VectorXd x(static_cast<Eigen::Index>(StateVector::dimension(n, m1)));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < s.rates.rows(); ++i)
    for (Eigen::Index j = 0; j < s.rates.cols(); ++j) x(k++) = s.rates(i, j) / rate_scale;
  for (std::size_t i = 0; i < n; ++i) x(k++) = s.capacities[i] / f_local;
  for (std::size_t j = 0; j < m1; ++j)
    x(k++) = s.capacities[n + j] / (j == 0 ? f_edge_macro : f_edge_small);
  for (double p : s.p_max) x(k++) = p / p_max;
  for (std::size_t j = 0; j < m1; ++j)
    x(k++) = s.bandwidth[j] / (j == 0 ? bandwidth_macro : bandwidth_small);
  for (double q : s.queues.local) x(k++) = q / queue_scale;
  for (double q : s.queues.edge) x(k++) = q / queue_scale;
  return x;
}

std::string layout_schema(std::size_t n, std::size_t m1, const StateNormalizer& norm) {
  using nlohmann::json;
  const ActionLayout al{n, m1};
  std::size_t off = 0;
  auto block = [&](const char* name, std::size_t len, const char* unit, json divisor) {
    json b = {{"name", name}, {"offset", off}, {"length", len}, {"unit", unit}, {"divisor", divisor}};
    off += len;
    return b;
  };
  json state = json::array();
  state.push_back(block("rates", n * m1, "bit/s", norm.rate_scale));
  state.push_back(block("capacities", n + m1, "cycles/s",
                        {{"local", norm.f_local}, {"macro", norm.f_edge_macro}, {"small", norm.f_edge_small}}));
  state.push_back(block("p_max", n, "W", norm.p_max));
  state.push_back(block("bandwidth", m1, "Hz", {{"macro", norm.bandwidth_macro}, {"small", norm.bandwidth_small}}));
  state.push_back(block("queue_local", n, "bit", norm.queue_scale));
  state.push_back(block("queue_edge", m1, "bit", norm.queue_scale));
  json action = json::array({
      {{"name", "bandwidth"}, {"offset", al.bandwidth()}, {"length", n * m1}},
      {{"name", "power"}, {"offset", al.power()}, {"length", n}},
      {{"name", "edge_departure"}, {"offset", al.departure()}, {"length", m1}},
      {{"name", "local_compute"}, {"offset", al.local_compute()}, {"length", n}},
      {{"name", "edge_compute"}, {"offset", al.edge_compute()}, {"length", n * m1}},
  });
  json doc = {{"schema_version", 1},
              {"num_devices", n},
              {"num_stations", m1},
              {"matrix_order", "row-major (device, station)"},
              {"state_dim", off},
              {"state_blocks", state},
              {"action_dim", al.size()},
              {"action_blocks", action}};
  return doc.dump(2);
}

StateVector build_state(const Topology& topo, const ChannelRealization& channel,
                        const QueueState& queues) {
  const auto n = topo.num_devices();
  const auto m1 = topo.num_stations();
  if (queues.local.size() != n || queues.edge.size() != m1 ||
      static_cast<std::size_t>(channel.gains.rows()) != n ||
      static_cast<std::size_t>(channel.gains.cols()) != m1)
    throw std::invalid_argument("build_state: inconsistent (N, M) across topology, channel, queues");
  StateVector s;
  s.rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m1));
  std::vector<double> full_power(n);
  for (std::size_t i = 0; i < n; ++i) full_power[i] = topo.devices[i].p_max;
  std::vector<std::size_t> load(m1, 0);
  for (auto j : topo.association) ++load[j];
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = topo.association[i];
    const double w = topo.stations[j].bandwidth / static_cast<double>(load[j]);
    const double interf = interference(i, j, full_power, channel, topo);
    s.rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        uplink_rate(i, j, w, full_power[i], channel, interf);
  }
  for (const auto& d : topo.devices) s.capacities.push_back(d.f_local);
  for (const auto& st : topo.stations) s.capacities.push_back(st.f_edge);
  for (const auto& d : topo.devices) s.p_max.push_back(d.p_max);
  for (const auto& st : topo.stations) s.bandwidth.push_back(st.bandwidth);
  s.queues = queues;
  return s;
}

// ---- action projection ------------------------------------------------------

Action project_action(std::span<const double> u, const Topology& topo, const QueueState& queues,
                      const EnergyConfig& energy) {
  const auto n = topo.num_devices();
  const auto m1 = topo.num_stations();
  const ActionLayout lay{n, m1};
  if (u.size() != lay.size()) throw std::invalid_argument("raw action has the wrong dimension");
  auto at = [&](std::size_t k) {
    const double v = u[k];
    if (std::isnan(v)) throw std::invalid_argument("raw action contains NaN");
    return std::clamp(v, 0.0, 1.0);
  };

  Action a = Action::zeros(n, m1);
  for (std::size_t i = 0; i < n; ++i) {
    a.power[i] = at(lay.power() + i) * topo.devices[i].p_max;
    a.local_compute[i] = at(lay.local_compute() + i) * topo.devices[i].f_local;
  }
  for (std::size_t j = 0; j < m1; ++j) {
    const auto& st = topo.stations[j];
    const double cap = st.f_edge * energy.slot_len / energy.cycles_per_bit;
    a.edge_departure[j] = std::min(at(lay.departure() + j) * cap, queues.edge[j]);

    double bw_sum = 0.0, fe_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (topo.association[i] != j) continue;
      bw_sum += at(lay.bandwidth() + i * m1 + j);
      fe_sum += at(lay.edge_compute() + i * m1 + j);
    }
    const double bw_scale = bw_sum > 1.0 ? 1.0 / bw_sum : 1.0;
    const double fe_scale = fe_sum > 1.0 ? 1.0 / fe_sum : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (topo.association[i] != j) continue;
      const auto ri = static_cast<Eigen::Index>(i);
      const auto rj = static_cast<Eigen::Index>(j);
      a.bandwidth(ri, rj) = at(lay.bandwidth() + i * m1 + j) * bw_scale * st.bandwidth;
      a.edge_compute(ri, rj) = at(lay.edge_compute() + i * m1 + j) * fe_scale * st.f_edge;
    }
  }
  return a;
}

FeasibilityReport check_feasible(const Action& a, const Topology& topo, const QueueState& queues,
                                 const EnergyConfig& energy, double tol) {
  const auto n = topo.num_devices();
  const auto m1 = topo.num_stations();
  auto fail = [](std::string why) { return FeasibilityReport{false, std::move(why)}; };
  if (static_cast<std::size_t>(a.bandwidth.rows()) != n || static_cast<std::size_t>(a.bandwidth.cols()) != m1 ||
      static_cast<std::size_t>(a.edge_compute.rows()) != n ||
      static_cast<std::size_t>(a.edge_compute.cols()) != m1 || a.power.size() != n ||
      a.local_compute.size() != n || a.edge_departure.size() != m1)
    return fail("action dimensions");
  if (!a.bandwidth.allFinite() || !a.edge_compute.allFinite()) return fail("non-finite allocation");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = topo.devices[i];
    if (!(a.power[i] >= 0.0) || a.power[i] > d.p_max * (1.0 + tol))
      return fail("power of device " + std::to_string(i));
    if (!(a.local_compute[i] >= 0.0) || a.local_compute[i] > d.f_local * (1.0 + tol))
      return fail("local compute of device " + std::to_string(i));
  }
  for (std::size_t j = 0; j < m1; ++j) {
    const auto& st = topo.stations[j];
    const auto rj = static_cast<Eigen::Index>(j);
    double bw = 0.0, fe = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ri = static_cast<Eigen::Index>(i);
      const double wij = a.bandwidth(ri, rj);
      const double fij = a.edge_compute(ri, rj);
      if (wij < 0.0 || fij < 0.0) return fail("negative share at station " + std::to_string(j));
      if (topo.association[i] != j && (wij != 0.0 || fij != 0.0))
        return fail("share for a non-associated pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
      bw += wij;
      fe += fij;
    }
    if (bw > st.bandwidth * (1.0 + tol)) return fail("bandwidth budget at station " + std::to_string(j));
    if (fe > st.f_edge * (1.0 + tol)) return fail("edge compute budget at station " + std::to_string(j));
    const double psi = a.edge_departure[j];
    if (!(psi >= 0.0) || psi * energy.cycles_per_bit > st.f_edge * energy.slot_len * (1.0 + tol))
      return fail("edge departure at station " + std::to_string(j));
    if (psi > queues.edge[j] * (1.0 + tol) + tol) return fail("edge departure exceeds backlog at station " + std::to_string(j));
  }
  return {};
}

// ---- environment -----------------------------------------------------------

std::vector<std::size_t> relevant_coordinates(const Topology& topo) {
  const ActionLayout lay{topo.num_devices(), topo.num_stations()};
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < lay.num_devices; ++i) {
    const auto j = topo.association[i];
    idx.push_back(lay.bandwidth() + i * lay.num_stations + j);
    idx.push_back(lay.power() + i);
    idx.push_back(lay.local_compute() + i);
    idx.push_back(lay.edge_compute() + i * lay.num_stations + j);
  }
  for (std::size_t j = 0; j < lay.num_stations; ++j) idx.push_back(lay.departure() + j);
  return idx;
}

Eigen::VectorXd relevant_mask(const Topology& topo) {
  const ActionLayout lay{topo.num_devices(), topo.num_stations()};
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.size()));
  for (auto k : relevant_coordinates(topo)) m(static_cast<Eigen::Index>(k)) = 1.0;
  return m;
}

double arrival_cap(const ArrivalConfig& a) {
  if (a.mean_bits <= 0.0) return 0.0;
  switch (a.distribution) {
    case ArrivalDistribution::poisson_scaled: {
      const double unit = a.unit_bits > 0.0 ? a.unit_bits : 1.0;
      const double mu = a.mean_bits / unit;
      return unit * std::ceil(mu + 8.0 * std::sqrt(mu));
    }
    case ArrivalDistribution::uniform:
      return static_cast<double>(std::llround(2.0 * a.mean_bits));
  }
  return 0.0;
}

Env::Env(SimConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed), normalizer_(StateNormalizer::from_config(cfg_)) {
  reset();
  episode_ = 0;
}

StateVector Env::reset() {
  if (started_) ++episode_;
  started_ = true;
  topo_ = build_topology(cfg_.net, rng_);
  queues_ = QueueState::zeros(topo_.num_devices(), topo_.num_stations());
  tracker_ = EnergyTracker{};
  psi_max_ = 0.0;
  slot_ = 0;
  begin_slot();
  return state();
}

void Env::begin_slot() {
  channel_ = sample_channel(topo_, cfg_.net, rng_);
  arrivals_ = sample_arrivals(cfg_.arrivals, topo_.num_devices(), rng_);
  beta_ = predict_perturbation(topo_.num_devices(), cfg_.lyapunov.v_weight, tracker_.ee_estimate, psi_max_);
}

Action Env::project(std::span<const double> u) const {
  return project_action(u, topo_, queues_, cfg_.energy);
}

SlotOutcome Env::simulate(const Action& a) const {
  const auto n = topo_.num_devices();
  const auto m1 = topo_.num_stations();
  const auto& ec = cfg_.energy;
  SlotOutcome out;
  out.rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m1));
  out.flows = SlotFlows::zeros(n, m1);
  out.flows.arrivals = arrivals_;

  for (std::size_t i = 0; i < n; ++i) {
    const auto j = topo_.association[i];
    const auto ri = static_cast<Eigen::Index>(i);
    const auto rj = static_cast<Eigen::Index>(j);
    const double interf = interference(i, j, a.power, channel_, topo_);
    const double rate = uplink_rate(i, j, a.bandwidth(ri, rj), a.power[i], channel_, interf);
    out.rates(ri, rj) = rate;

    const double q = queues_.local[i];
    const double d_local = local_exec_amount(a.local_compute[i], ec.slot_len, ec.cycles_per_bit, q);
    // Offload is limited to what the reserved edge share can execute within the slot.
    const double exec = a.edge_compute(ri, rj) * ec.slot_len / ec.cycles_per_bit;
    const double d_off = offload_amount(rate, ec.slot_len, std::min(q - d_local, exec));
    out.flows.d_local[i] = d_local;
    out.flows.d_offload(ri, rj) = d_off;
    out.flows.psi_device[i] = d_local + d_off;
  }
  for (std::size_t j = 0; j < m1; ++j)
    out.flows.psi_edge[j] = std::min(a.edge_departure[j], queues_.edge[j]);

  out.energy = total_energy(out.flows, a.local_compute, a.power, a.edge_compute, topo_.association, ec);
  out.ee = slot_ee(out.energy.total, out.flows.accomplished_bits());
  out.objective = p2_objective(out.flows, out.energy.total, queues_, beta_, cfg_.lyapunov.v_weight, out.ee.value);
  out.reward = immediate_reward(out.objective.total, true, cfg_.lyapunov.infeasible_penalty);

  out.next_queues = QueueState::zeros(n, m1);
  for (std::size_t i = 0; i < n; ++i)
    out.next_queues.local[i] = step_device_queue(queues_.local[i], out.flows.psi_device[i], arrivals_[i]);
  for (std::size_t j = 0; j < m1; ++j)
    out.next_queues.edge[j] = step_edge_queue(queues_.edge[j], out.flows.psi_edge[j], out.flows.inflow(j),
                                              topo_.stations[j].f_edge, ec.slot_len, ec.cycles_per_bit);
  return out;
}

DriftBounds Env::drift_bounds() const {
  const auto n = topo_.num_devices();
  const auto m1 = topo_.num_stations();
  const auto& ec = cfg_.energy;
  DriftBounds b;
  b.offload_max = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m1));
  const double lam = arrival_cap(cfg_.arrivals);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = topo_.association[i];
    const auto& d = topo_.devices[i];
    const double r_max = uplink_rate(i, j, topo_.stations[j].bandwidth, d.p_max, channel_, 0.0);
    const double d_max = r_max * ec.slot_len;
    b.offload_max(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d_max;
    b.psi_device_max.push_back(ec.slot_len * d.f_local / ec.cycles_per_bit + d_max);
    b.arrival_max.push_back(lam);
  }
  for (const auto& st : topo_.stations) b.psi_edge_max.push_back(st.f_edge * ec.slot_len / ec.cycles_per_bit);
  return b;
}

StepResult Env::step(const Action& action) {
  const auto feas = check_feasible(action, topo_, queues_, cfg_.energy);
  if (!feas.feasible) throw std::invalid_argument("infeasible action: " + feas.first_violation);

  StepResult res;
  res.outcome = simulate(action);
  const auto& o = res.outcome;
  const double c = drift_bound_constant(drift_bounds());
  const auto drift = drift_plus_penalty_check(queues_, o.next_queues, o.flows, beta_,
                                              cfg_.lyapunov.v_weight, o.ee.value, c);

  auto& m = res.metrics;
  m.episode = episode_;
  m.slot = slot_;
  m.arrivals = std::accumulate(arrivals_.begin(), arrivals_.end(), 0.0);
  m.local_bits = std::accumulate(o.flows.d_local.begin(), o.flows.d_local.end(), 0.0);
  m.offload_bits = o.flows.d_offload.sum();
  m.edge_departure = std::accumulate(o.flows.psi_edge.begin(), o.flows.psi_edge.end(), 0.0);
  m.e_local = std::accumulate(o.energy.local.begin(), o.energy.local.end(), 0.0);
  m.e_edge = o.energy.edge.sum();
  m.e_total = o.energy.total;
  m.eta_slot = o.ee.value;
  m.zero_throughput = o.ee.zero_throughput;
  m.beta = beta_.beta.empty() ? 0.0 : beta_.beta.front();
  m.objective = o.objective.total;
  m.reward = o.reward;
  m.drift_lhs = drift.lhs;
  m.drift_rhs = drift.rhs;
  m.bound_constant = c;
  m.backlog_local = o.next_queues.total_local();
  m.backlog_edge = o.next_queues.total_edge();

  queues_ = o.next_queues;
  tracker_ = update_tracker(tracker_, o.energy.total, o.flows.accomplished_bits());
  m.ee_estimate = tracker_.ee_estimate;
  psi_max_ = *std::max_element(o.flows.psi_device.begin(), o.flows.psi_device.end());
  ++slot_;
  move_devices(topo_, cfg_.net, rng_);
  begin_slot();

  res.reward = o.reward;
  res.next_state = state();
  res.episode_done = cfg_.training.episode_len > 0 && slot_ >= cfg_.training.episode_len;
  return res;
}

}  // namespace dtwin
