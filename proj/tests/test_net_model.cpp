#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dtwin/net_model.hpp"

using namespace dtwin;

namespace {

StationTwin station(std::size_t id, double x, double y, double radius) {
  StationTwin s;
  s.id = id;
  s.location = {x, y};
  s.bandwidth = 5e6;
  s.f_edge = 10e9;
  s.coverage_radius = radius;
  return s;
}

DeviceTwin device(std::size_t id, double x, double y) {
  DeviceTwin d;
  d.id = id;
  d.location = {x, y};
  d.p_max = 0.1;
  d.f_local = 0.5e9;
  return d;
}

// Two small cells far apart, one device on each, plus the macro cell.
struct TwoCells {
  Topology topo;
  ChannelRealization ch;
  TwoCells() {
    topo.stations = {station(0, 0, 0, std::numeric_limits<double>::infinity()), station(1, 0, 0, 150),
                     station(2, 1000, 0, 150)};
    topo.devices = {device(0, 100, 0), device(1, 900, 0)};
    topo.association = associate(topo.devices, topo.stations);
    ch.gains = Eigen::MatrixXd::Ones(2, 3);
    ch.distances = Eigen::MatrixXd::Constant(2, 3, 100.0);
    ch.path_loss_exp = 3.0;
    ch.noise_power = 1e-14;
  }
};

}  // namespace

TEST(BuildTopology, ReferenceSizes) {
  NetConfig cfg;
  Rng rng(7);
  const auto t = build_topology(cfg, rng);
  EXPECT_EQ(t.num_devices(), 20u);
  EXPECT_EQ(t.num_stations(), 4u);
  EXPECT_EQ(t.association.size(), 20u);
}

TEST(BuildTopology, SingleDeviceNoSmallCells) {
  NetConfig cfg;
  cfg.num_devices = 1;
  cfg.num_small_cells = 0;
  Rng rng(1);
  const auto t = build_topology(cfg, rng);
  ASSERT_EQ(t.num_stations(), 1u);
  EXPECT_EQ(t.association[0], 0u);
}

TEST(BuildTopology, DeterministicUnderSeed) {
  NetConfig cfg;
  Rng a(42), b(42);
  const auto ta = build_topology(cfg, a);
  const auto tb = build_topology(cfg, b);
  ASSERT_EQ(ta.num_devices(), tb.num_devices());
  for (std::size_t i = 0; i < ta.num_devices(); ++i) {
    EXPECT_EQ(ta.devices[i].location.x, tb.devices[i].location.x);
    EXPECT_EQ(ta.devices[i].location.y, tb.devices[i].location.y);
  }
  EXPECT_EQ(ta.association, tb.association);
}

TEST(BuildTopology, RejectsInvalid) {
  NetConfig cfg;
  cfg.num_devices = 0;
  Rng rng(1);
  EXPECT_THROW(build_topology(cfg, rng), std::invalid_argument);
  cfg.num_devices = 5;
  cfg.region_width = -1.0;
  EXPECT_THROW(build_topology(cfg, rng), std::invalid_argument);
}

TEST(BuildTopology, AssociationRespectsCoverage) {
  NetConfig cfg;
  cfg.layout = SmallCellLayout::random;
  cfg.num_devices = 200;
  cfg.num_small_cells = 5;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const auto t = build_topology(cfg, rng);
    for (std::size_t i = 0; i < t.num_devices(); ++i) {
      const auto j = t.association[i];
      if (j == 0) continue;
      EXPECT_LT(distance(t.devices[i].location, t.stations[j].location), t.stations[j].coverage_radius);
    }
  }
}

TEST(Associate, NearestInRange) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<StationTwin> st = {station(0, 500, 500, inf), station(1, 50, 0, 100), station(2, 200, 0, 100)};
  std::vector<DeviceTwin> dv = {device(0, 0, 0)};
  EXPECT_EQ(associate(dv, st)[0], 1u);
}

TEST(Associate, FallsBackToMacro) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<StationTwin> st = {station(0, 0, 0, inf), station(1, 50, 0, 100), station(2, 200, 0, 100)};
  std::vector<DeviceTwin> dv = {device(0, 500, 500)};
  EXPECT_EQ(associate(dv, st)[0], 0u);
}

TEST(Associate, TieGoesToLowestIndex) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<StationTwin> st = {station(0, 0, 0, inf), station(1, -50, 0, 100), station(2, 50, 0, 100)};
  std::vector<DeviceTwin> dv = {device(0, 0, 0)};
  EXPECT_EQ(associate(dv, st)[0], 1u);
}

TEST(SampleChannel, ExponentialMeanOne) {
  NetConfig cfg;
  cfg.num_devices = 250;
  Rng rng(3);
  const auto t = build_topology(cfg, rng);
  double sum = 0.0;
  std::size_t count = 0;
  double min_gain = 1.0;
  while (count < 1000000) {
    const auto ch = sample_channel(t, cfg, rng);
    sum += ch.gains.sum();
    min_gain = std::min(min_gain, ch.gains.minCoeff());
    count += static_cast<std::size_t>(ch.gains.size());
  }
  EXPECT_NEAR(sum / static_cast<double>(count), 1.0, 0.01);
  EXPECT_GE(min_gain, 0.0);
}

TEST(SampleChannel, DeterministicAndPositiveDistances) {
  NetConfig cfg;
  Rng r0(5);
  const auto t = build_topology(cfg, r0);
  Rng a(9), b(9);
  const auto ca = sample_channel(t, cfg, a);
  const auto cb = sample_channel(t, cfg, b);
  EXPECT_EQ(ca.gains, cb.gains);
  EXPECT_GT(ca.distances.minCoeff(), 0.0);
}

TEST(Interference, ReceivedPowerFromOtherCell) {
  TwoCells w;
  ASSERT_EQ(w.topo.association[0], 1u);
  ASSERT_EQ(w.topo.association[1], 2u);
  std::vector<double> p = {0.1, 0.1};
  EXPECT_NEAR(interference(0, 1, p, w.ch, w.topo), 1.0e-7, 1e-20);
}

TEST(Interference, ZeroCases) {
  TwoCells w;
  std::vector<double> lone = {0.1, 0.0};
  EXPECT_EQ(interference(0, 1, lone, w.ch, w.topo), 0.0);
  std::vector<double> none = {0.0, 0.0};
  EXPECT_EQ(interference(1, 2, none, w.ch, w.topo), 0.0);
  std::vector<double> p = {0.1, 0.1};
  EXPECT_EQ(interference(0, 0, p, w.ch, w.topo), 0.0);
}

TEST(UplinkRate, ReferenceValue) {
  const double r = shannon_rate(5e6, 0.1, 1.0, 100.0, 3.0, 1e-14, 0.0);
  EXPECT_NEAR(r, 5e6 * std::log2(1.0 + 1e7), 1e-6);
  EXPECT_NEAR(r, 1.16267e8, 1e3);
}

TEST(UplinkRate, ZeroPowerAndLinearInBandwidth) {
  EXPECT_EQ(shannon_rate(5e6, 0.0, 1.0, 100.0, 3.0, 1e-14, 0.0), 0.0);
  EXPECT_EQ(shannon_rate(0.0, 0.1, 1.0, 100.0, 3.0, 1e-14, 0.0), 0.0);
  const double r1 = shannon_rate(5e6, 0.1, 0.7, 80.0, 3.0, 1e-14, 1e-12);
  const double r2 = shannon_rate(10e6, 0.1, 0.7, 80.0, 3.0, 1e-14, 1e-12);
  EXPECT_EQ(r2, 2.0 * r1);
}

TEST(UplinkRate, MacroIgnoresInterference) {
  TwoCells w;
  const double macro = uplink_rate(0, 0, 1e7, 0.1, w.ch, 1e-9);
  EXPECT_EQ(macro, shannon_rate(1e7, 0.1, 1.0, 100.0, 3.0, 1e-14, 0.0));
  const double small = uplink_rate(0, 1, 5e6, 0.1, w.ch, 1e-9);
  EXPECT_LT(small, shannon_rate(5e6, 0.1, 1.0, 100.0, 3.0, 1e-14, 0.0));
}

TEST(UplinkRate, Monotonicity) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double w = 1e6 * (1 + 9 * u(rng)), p = 0.1 * u(rng), h = 2 * u(rng), r = 1 + 500 * u(rng);
    const double i = 1e-10 * u(rng);
    const double base = shannon_rate(w, p, h, r, 3.0, 1e-14, i);
    EXPECT_LE(base, shannon_rate(w, p * 1.1, h, r, 3.0, 1e-14, i));
    EXPECT_LE(base, shannon_rate(w * 1.1, p, h, r, 3.0, 1e-14, i));
    EXPECT_GE(base, shannon_rate(w, p, h, r, 3.0, 1e-14, i * 1.1 + 1e-15));
    EXPECT_GE(base, shannon_rate(w, p, h, r * 1.1, 3.0, 1e-14, i));
  }
}

TEST(MoveDevices, StaysInRegionAndReassociates) {
  NetConfig cfg;
  cfg.mobility = Mobility::random_walk;
  cfg.walk_step = 50.0;
  Rng rng(2);
  auto t = build_topology(cfg, rng);
  for (int s = 0; s < 200; ++s) {
    move_devices(t, cfg, rng);
    for (std::size_t i = 0; i < t.num_devices(); ++i) {
      const auto& l = t.devices[i].location;
      EXPECT_GE(l.x, 0.0);
      EXPECT_LE(l.x, cfg.region_width);
      EXPECT_GE(l.y, 0.0);
      EXPECT_LE(l.y, cfg.region_height);
    }
    EXPECT_EQ(t.association, associate(t.devices, t.stations));
  }
}
