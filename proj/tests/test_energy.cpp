#include <gtest/gtest.h>

#include "dtwin/energy.hpp"

using namespace dtwin;

TEST(LocalEnergy, CubicLaw) {
  EnergyConfig c;
  EXPECT_NEAR(local_energy(0.5e9, c), 0.0125, 1e-15);
  EXPECT_EQ(local_energy(0.0, c), 0.0);
  EXPECT_NEAR(local_energy(1e9, c), 8.0 * local_energy(0.5e9, c), 1e-15);
}

TEST(EdgeEnergy, TransmitPlusCompute) {
  EnergyConfig c;
  EXPECT_NEAR(edge_energy(0.1, 1e6, 1e10, c), 0.02, 1e-15);
  EXPECT_EQ(edge_energy(0.0, 0.0, 0.0, c), 0.0);
  EXPECT_NEAR(edge_energy(0.1, 0.0, 0.0, c), 0.01, 1e-15);
  EXPECT_THROW(edge_energy(0.1, 1.0, 0.0, c), std::invalid_argument);
}

TEST(TotalEnergy, TermByTerm) {
  EnergyConfig c;
  auto f = SlotFlows::zeros(2, 2);
  f.d_offload(0, 1) = 1e6;
  f.d_offload(1, 0) = 2e6;
  std::vector<double> fl = {0.5e9, 0.2e9}, p = {0.1, 0.05};
  Eigen::MatrixXd fe = Eigen::MatrixXd::Zero(2, 2);
  fe(0, 1) = 1e10;
  fe(1, 0) = 2e10;
  const auto e = total_energy(f, fl, p, fe, {1, 0}, c);
  const double want = 1e-27 * 0.1 * (0.125e27 + 0.008e27) + (0.01 + 0.01) + (0.005 + 2e8 / 2e10);
  EXPECT_NEAR(e.total, want, 1e-15);
  EXPECT_NEAR(e.local[0], 0.0125, 1e-15);
  EXPECT_NEAR(e.edge(0, 1), 0.02, 1e-15);
  EXPECT_EQ(e.edge(0, 0), 0.0);
}

TEST(TotalEnergy, LocalOnlyAndZero) {
  EnergyConfig c;
  auto f = SlotFlows::zeros(1, 1);
  Eigen::MatrixXd fe = Eigen::MatrixXd::Zero(1, 1);
  std::vector<double> fl = {0.5e9}, p = {0.0};
  EXPECT_EQ(total_energy(f, fl, p, fe, {0}, c).total, local_energy(0.5e9, c));
  fl = {0.0};
  EXPECT_EQ(total_energy(f, fl, p, fe, {0}, c).total, 0.0);
}

TEST(SlotEe, DivisionGuardAndScale) {
  EXPECT_DOUBLE_EQ(slot_ee(2.0, 1e6).value, 2e-6);
  const auto z = slot_ee(2.0, 0.0);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_TRUE(z.zero_throughput);
  EXPECT_DOUBLE_EQ(slot_ee(6.0, 3e6).value, slot_ee(2.0, 1e6).value);
}

TEST(Tracker, RatioOfSums) {
  EnergyTracker t;
  t = update_tracker(t, 1.0, 1e6);
  EXPECT_DOUBLE_EQ(t.ee_estimate, 1e-6);
  t = update_tracker(t, 3.0, 1e6);
  EXPECT_DOUBLE_EQ(t.ee_estimate, 2e-6);
  // Mean of ratios would differ here: (1/1 + 1/3) / 2 J/Mbit.
  EnergyTracker u;
  u = update_tracker(u, 1.0, 1e6);
  u = update_tracker(u, 1.0, 3e6);
  EXPECT_DOUBLE_EQ(u.ee_estimate, 0.5e-6);
}

TEST(Tracker, ZeroBitSlot) {
  EnergyTracker t = update_tracker({}, 1.0, 1e6);
  t = update_tracker(t, 5.0, 0.0);
  EXPECT_DOUBLE_EQ(t.ee_estimate, 1e-6);
  EXPECT_EQ(t.cum_energy, 1.0);
  EXPECT_EQ(t.slots, 2u);
  EXPECT_EQ(t.zero_throughput_slots, 1u);
}
