#include "dtwin/schemes.hpp"

#include <stdexcept>
#include <vector>

namespace dtwin {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::joint: return "joint";
    case Scheme::no_compute_alloc: return "no-compute-alloc";
    case Scheme::no_radio_alloc: return "no-radio-alloc";
    case Scheme::random_feasible: return "random-feasible";
    case Scheme::greedy_drift: return "greedy-drift";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& s) {
  for (auto t : {Scheme::joint, Scheme::no_compute_alloc, Scheme::no_radio_alloc,
                 Scheme::random_feasible, Scheme::greedy_drift})
    if (to_string(t) == s) return t;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

SchemeSpec scheme_spec(Scheme s) {
  switch (s) {
    case Scheme::joint: return {s, true, "none"};
    case Scheme::no_compute_alloc:
      return {s, true, "edge_compute=equal split, local_compute=1, edge_departure=1"};
    case Scheme::no_radio_alloc: return {s, true, "power=1, bandwidth=equal split"};
    case Scheme::random_feasible: return {s, false, "none (uniform raw action)"};
    case Scheme::greedy_drift: return {s, false, "none (coordinate descent on the slot objective)"};
  }
  return {};
}

namespace {

void equal_split(std::span<double> u, std::size_t offset, const Topology& topo) {
  const auto n = topo.num_devices();
  const auto m1 = topo.num_stations();
  std::vector<std::size_t> load(m1, 0);
  for (auto j : topo.association) ++load[j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m1; ++j)
      u[offset + i * m1 + j] = topo.association[i] == j ? 1.0 / static_cast<double>(load[j]) : 0.0;
}

void fill(std::span<double> u, std::size_t offset, std::size_t len, double v) {
  for (std::size_t k = 0; k < len; ++k) u[offset + k] = v;
}

}  // namespace

void apply_scheme_mask(Scheme s, std::span<double> u, const Topology& topo) {
  const ActionLayout lay{topo.num_devices(), topo.num_stations()};
  if (u.size() != lay.size()) throw std::invalid_argument("raw action has the wrong dimension");
  switch (s) {
    case Scheme::no_compute_alloc:
      equal_split(u, lay.edge_compute(), topo);
      fill(u, lay.local_compute(), lay.num_devices, 1.0);
      fill(u, lay.departure(), lay.num_stations, 1.0);
      break;
    case Scheme::no_radio_alloc:
      equal_split(u, lay.bandwidth(), topo);
      fill(u, lay.power(), lay.num_devices, 1.0);
      break;
    default:
      break;
  }
}

Eigen::VectorXd active_dims(Scheme s, const ActionLayout& lay) {
  Eigen::VectorXd a = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(lay.size()));
  auto off = [&](std::size_t start, std::size_t len) {
    a.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)).setZero();
  };
  const auto nm = lay.num_devices * lay.num_stations;
  switch (s) {
    case Scheme::no_compute_alloc:
      off(lay.edge_compute(), nm);
      off(lay.local_compute(), lay.num_devices);
      off(lay.departure(), lay.num_stations);
      break;
    case Scheme::no_radio_alloc:
      off(lay.bandwidth(), nm);
      off(lay.power(), lay.num_devices);
      break;
    default:
      break;
  }
  return a;
}

}  // namespace dtwin
