#include "dtwin/task_queue.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dtwin/stats.hpp"

namespace dtwin {

double QueueState::total_local() const { return std::accumulate(local.begin(), local.end(), 0.0); }
double QueueState::total_edge() const { return std::accumulate(edge.begin(), edge.end(), 0.0); }

SlotFlows SlotFlows::zeros(std::size_t n, std::size_t m_plus_1) {
  SlotFlows f;
  f.d_local.assign(n, 0.0);
  f.d_offload = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m_plus_1));
  f.psi_device.assign(n, 0.0);
  f.psi_edge.assign(m_plus_1, 0.0);
  f.arrivals.assign(n, 0.0);
  return f;
}

double SlotFlows::inflow(std::size_t j) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d_offload.rows(); ++i) s += d_offload(i, static_cast<Eigen::Index>(j));
  return s;
}

double SlotFlows::accomplished_bits() const {
  return std::accumulate(d_local.begin(), d_local.end(), 0.0) + d_offload.sum();
}

std::vector<double> sample_arrivals(const ArrivalConfig& process, std::size_t num_devices, Rng& rng) {
  if (process.mean_bits < 0.0) throw std::invalid_argument("arrival mean must be non-negative");
  std::vector<double> out(num_devices, 0.0);
  if (process.mean_bits == 0.0) return out;
  switch (process.distribution) {
    case ArrivalDistribution::poisson_scaled: {
      const double unit = process.unit_bits > 0.0 ? process.unit_bits : 1.0;
      std::poisson_distribution<long long> count(process.mean_bits / unit);
      for (auto& v : out) v = static_cast<double>(count(rng)) * unit;
      break;
    }
    case ArrivalDistribution::uniform: {
      std::uniform_int_distribution<long long> bits(0, static_cast<long long>(std::llround(2.0 * process.mean_bits)));
      for (auto& v : out) v = static_cast<double>(bits(rng));
      break;
    }
  }
  return out;
}

double local_exec_amount(double f_alloc, double slot_len, double cycles_per_bit, double available) {
  if (f_alloc < 0.0) throw std::invalid_argument("local compute allocation must be non-negative");
  return std::min(slot_len * f_alloc / cycles_per_bit, std::max(available, 0.0));
}

double offload_amount(double rate, double slot_len, double available) {
  return std::min(std::max(rate, 0.0) * slot_len, std::max(available, 0.0));
}

double step_device_queue(double q, double psi, double arrival) {
  return std::max(q - psi, 0.0) + arrival;
}

double step_edge_queue(double q, double psi_j, double inflow, double f_edge, double slot_len,
                       double cycles_per_bit) {
  const double cap = f_edge * slot_len;
  if (psi_j < 0.0 || psi_j * cycles_per_bit > cap * (1.0 + 1e-12))
    throw std::invalid_argument("edge departure " + std::to_string(psi_j) +
                                " bits exceeds the server's per-slot cycle budget");
  return std::max(q - psi_j, 0.0) + inflow;
}

StabilityReport stability_metric(std::span<const double> local_totals,
                                 std::span<const double> edge_totals) {
  if (local_totals.empty() || local_totals.size() != edge_totals.size())
    throw std::invalid_argument("stability_metric needs a non-empty queue history");
  const auto t = local_totals.size();
  StabilityReport rep;
  rep.mean_local = stats::mean(local_totals);
  rep.mean_edge = stats::mean(edge_totals);

  const std::size_t start = t / 2;
  if (t - start < 3) return rep;
  std::vector<double> xs, ys;
  for (std::size_t k = start; k < t; ++k) {
    xs.push_back(static_cast<double>(k));
    ys.push_back(local_totals[k] + edge_totals[k]);
  }
  const auto fit = stats::linear_fit(xs, ys);
  rep.slope = fit.slope;
  rep.slope_stderr = fit.stderr_hac;
  const double z = stats::normal_quantile(0.975);
  rep.ci_low = fit.slope - z * fit.stderr_hac;
  rep.ci_high = fit.slope + z * fit.stderr_hac;
  return rep;
}

StabilityReport stability_metric(std::span<const QueueState> history) {
  std::vector<double> loc, edg;
  loc.reserve(history.size());
  edg.reserve(history.size());
  for (const auto& q : history) {
    loc.push_back(q.total_local());
    edg.push_back(q.total_edge());
  }
  return stability_metric(loc, edg);
}

}  // namespace dtwin
