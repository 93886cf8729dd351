#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/config.hpp"

namespace dtwin {

using Rng = std::mt19937_64;

/// Digital-twin snapshot of an IIoT device.
struct DeviceTwin {
  std::size_t id = 0;
  double p_max = 0.0;     // W
  Point location;
  double f_local = 0.0;   // cycles/s
};

/// Digital-twin snapshot of a base station. Index 0 is the macro cell and
/// has unbounded coverage.
struct StationTwin {
  std::size_t id = 0;
  Point location;
  double bandwidth = 0.0;        // Hz
  double f_edge = 0.0;           // cycles/s
  double coverage_radius = 0.0;  // m, +inf for the macro cell
};

struct Topology {
  std::vector<DeviceTwin> devices;
  std::vector<StationTwin> stations;
  std::vector<std::size_t> association;  // device -> station

  std::size_t num_devices() const { return devices.size(); }
  std::size_t num_stations() const { return stations.size(); }
  /// Devices currently associated with station j, in ascending id order.
  std::vector<std::size_t> members(std::size_t j) const;
};

struct ChannelRealization {
  Eigen::MatrixXd gains;      // N x (M+1), small-scale fading power gain
  Eigen::MatrixXd distances;  // N x (M+1), metres
  double path_loss_exp = 3.0;
  double noise_power = 1e-14;

  /// h * r^-alpha for the (device, station) link.
  double link_gain(std::size_t i, std::size_t j) const;
};

double distance(const Point& a, const Point& b);

Topology build_topology(const NetConfig& cfg, Rng& rng);

/// Nearest small cell whose coverage strictly contains the device; ties go to
/// the lowest index; falls back to the macro cell (0).
std::vector<std::size_t> associate(std::span<const DeviceTwin> devices,
                                   std::span<const StationTwin> stations);

/// Fresh Rayleigh power gains (exponential, mean 1) and current distances.
ChannelRealization sample_channel(const Topology& topo, const NetConfig& cfg, Rng& rng);

/// Bounded random walk with reflecting region boundaries, followed by re-association.
void move_devices(Topology& topo, const NetConfig& cfg, Rng& rng);

/// Co-channel power received at small cell j from devices other than i that
/// are associated with other small cells. Macro links see no interference.
double interference(std::size_t i, std::size_t j, std::span<const double> powers,
                    const ChannelRealization& channel, const Topology& topo);

/// w * log2(1 + p*h*r^-alpha / (noise + I)).
double shannon_rate(double bandwidth, double power, double gain, double dist, double alpha,
                    double noise, double interference_power);

/// Uplink rate for the (i, j) link; the interference term is dropped for j = 0.
double uplink_rate(std::size_t i, std::size_t j, double bandwidth, double power,
                   const ChannelRealization& channel, double interference_power);

}  // namespace dtwin
