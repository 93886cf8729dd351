#include "dtwin/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dtwin {

std::vector<std::size_t> Topology::members(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < association.size(); ++i)
    if (association[i] == j) out.push_back(i);
  return out;
}

double ChannelRealization::link_gain(std::size_t i, std::size_t j) const {
  return gains(i, j) * std::pow(distances(i, j), -path_loss_exp);
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

void validate(const NetConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid network config: ") + what);
  };
  require(cfg.num_devices > 0, "num_devices must be positive");
  require(cfg.region_width > 0 && cfg.region_height > 0, "region must be positive");
  require(cfg.coverage_radius > 0, "coverage_radius must be positive");
  require(cfg.p_max > 0, "p_max must be positive");
  require(cfg.f_local > 0, "f_local must be positive");
  require(cfg.f_edge_small > 0 && cfg.f_edge_macro > 0, "edge capacities must be positive");
  require(cfg.bandwidth_small > 0 && cfg.bandwidth_macro > 0, "bandwidths must be positive");
  require(cfg.path_loss_exp > 0, "path_loss_exp must be positive");
  require(cfg.noise_power > 0, "noise_power must be positive");
  require(cfg.min_distance > 0, "min_distance must be positive");
  if (cfg.layout == SmallCellLayout::explicit_positions)
    require(cfg.small_cell_positions.size() == cfg.num_small_cells,
            "small_cell_positions must list one entry per small cell");
}

Point uniform_point(const NetConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, cfg.region_width);
  std::uniform_real_distribution<double> uy(0.0, cfg.region_height);
  Point p;
  p.x = ux(rng);
  p.y = uy(rng);
  return p;
}

double reflect(double v, double hi) {
  // Single reflection suffices while the step is smaller than the region.
  if (v < 0.0) v = -v;
  if (v > hi) v = 2.0 * hi - v;
  return std::clamp(v, 0.0, hi);
}

}  // namespace

Topology build_topology(const NetConfig& cfg, Rng& rng) {
  validate(cfg);
  Topology topo;
  const Point center{cfg.region_width / 2.0, cfg.region_height / 2.0};

  StationTwin macro;
  macro.id = 0;
  macro.location = center;
  macro.bandwidth = cfg.bandwidth_macro;
  macro.f_edge = cfg.f_edge_macro;
  macro.coverage_radius = std::numeric_limits<double>::infinity();
  topo.stations.push_back(macro);

  const double ring = cfg.ring_fraction * std::min(cfg.region_width, cfg.region_height);
  for (std::size_t j = 1; j <= cfg.num_small_cells; ++j) {
    StationTwin s;
    s.id = j;
    s.bandwidth = cfg.bandwidth_small;
    s.f_edge = cfg.f_edge_small;
    s.coverage_radius = cfg.coverage_radius;
    switch (cfg.layout) {
      case SmallCellLayout::ring: {
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(j - 1) / static_cast<double>(cfg.num_small_cells);
        s.location = {center.x + ring * std::cos(angle), center.y + ring * std::sin(angle)};
        break;
      }
      case SmallCellLayout::random:
        s.location = uniform_point(cfg, rng);
        break;
      case SmallCellLayout::explicit_positions:
        s.location = cfg.small_cell_positions[j - 1];
        break;
    }
    topo.stations.push_back(s);
  }

  for (std::size_t i = 0; i < cfg.num_devices; ++i) {
    DeviceTwin d;
    d.id = i;
    d.p_max = cfg.p_max;
    d.f_local = cfg.f_local;
    d.location = uniform_point(cfg, rng);
    topo.devices.push_back(d);
  }
  topo.association = associate(topo.devices, topo.stations);
  return topo;
}

std::vector<std::size_t> associate(std::span<const DeviceTwin> devices,
                                   std::span<const StationTwin> stations) {
  std::vector<std::size_t> out(devices.size(), 0);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < stations.size(); ++j) {
      const double r = distance(devices[i].location, stations[j].location);
      if (r < stations[j].coverage_radius && r < best) {
        best = r;
        out[i] = j;
      }
    }
  }
  return out;
}

ChannelRealization sample_channel(const Topology& topo, const NetConfig& cfg, Rng& rng) {
  const auto n = topo.num_devices();
  const auto m = topo.num_stations();
  ChannelRealization ch;
  ch.gains.resize(n, m);
  ch.distances.resize(n, m);
  ch.path_loss_exp = cfg.path_loss_exp;
  ch.noise_power = cfg.noise_power;
  std::exponential_distribution<double> fading(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      ch.gains(i, j) = fading(rng);
      ch.distances(i, j) =
          std::max(cfg.min_distance, distance(topo.devices[i].location, topo.stations[j].location));
    }
  }
  return ch;
}

void move_devices(Topology& topo, const NetConfig& cfg, Rng& rng) {
  if (cfg.mobility == Mobility::fixed) return;
  std::uniform_real_distribution<double> step(-cfg.walk_step, cfg.walk_step);
  for (auto& d : topo.devices) {
    d.location.x = reflect(d.location.x + step(rng), cfg.region_width);
    d.location.y = reflect(d.location.y + step(rng), cfg.region_height);
  }
  topo.association = associate(topo.devices, topo.stations);
}

double interference(std::size_t i, std::size_t j, std::span<const double> powers,
                    const ChannelRealization& channel, const Topology& topo) {
  if (j == 0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < topo.num_devices(); ++k) {
    const auto jk = topo.association[k];
    if (k == i || jk == 0 || jk == j) continue;
    total += powers[k] * channel.link_gain(k, j);
  }
  return total;
}

double shannon_rate(double bandwidth, double power, double gain, double dist, double alpha,
                    double noise, double interference_power) {
  if (bandwidth <= 0.0 || power <= 0.0) return 0.0;
  const double sinr = power * gain * std::pow(dist, -alpha) / (noise + interference_power);
  return bandwidth * std::log2(1.0 + sinr);
}

double uplink_rate(std::size_t i, std::size_t j, double bandwidth, double power,
                   const ChannelRealization& channel, double interference_power) {
  const double extra = j == 0 ? 0.0 : interference_power;
  return shannon_rate(bandwidth, power, channel.gains(i, j), channel.distances(i, j),
                      channel.path_loss_exp, channel.noise_power, extra);
}

}  // namespace dtwin
