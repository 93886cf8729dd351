#include <cmath>

#include <gtest/gtest.h>

#include "dtwin/task_queue.hpp"

using namespace dtwin;

TEST(Arrivals, ZeroRate) {
  ArrivalConfig a;
  a.mean_bits = 0.0;
  Rng rng(1);
  for (double v : sample_arrivals(a, 10, rng)) EXPECT_EQ(v, 0.0);
}

TEST(Arrivals, SampleMeanPoissonAndUniform) {
  for (auto dist : {ArrivalDistribution::poisson_scaled, ArrivalDistribution::uniform}) {
    ArrivalConfig a;
    a.mean_bits = 1e6;
    a.distribution = dist;
    Rng rng(4);
    const auto xs = sample_arrivals(a, 100000, rng);
    double s = 0.0;
    for (double v : xs) {
      EXPECT_GE(v, 0.0);
      EXPECT_EQ(v, std::floor(v));
      s += v;
    }
    EXPECT_NEAR(s / 1e5, 1e6, 1e4);
  }
}

TEST(Arrivals, Deterministic) {
  ArrivalConfig a;
  Rng r1(8), r2(8);
  EXPECT_EQ(sample_arrivals(a, 50, r1), sample_arrivals(a, 50, r2));
}

TEST(LocalExec, FormulaZeroAndCap) {
  EXPECT_DOUBLE_EQ(local_exec_amount(0.5e9, 0.1, 100.0, 1e9), 5e5);
  EXPECT_EQ(local_exec_amount(0.0, 0.1, 100.0, 1e9), 0.0);
  EXPECT_EQ(local_exec_amount(0.5e9, 0.1, 100.0, 100.0), 100.0);
  EXPECT_THROW(local_exec_amount(-1.0, 0.1, 100.0, 1e9), std::invalid_argument);
}

TEST(Offload, FormulaZeroAndCap) {
  EXPECT_NEAR(offload_amount(1.1627e8, 0.1, 1e12), 1.1627e7, 1e-6);
  EXPECT_EQ(offload_amount(0.0, 0.1, 1e12), 0.0);
  EXPECT_EQ(offload_amount(1e8, 0.1, 1e3), 1e3);
}

TEST(DeviceQueue, Examples) {
  EXPECT_EQ(step_device_queue(10, 15, 3), 3);
  EXPECT_EQ(step_device_queue(10, 4, 0), 6);
  EXPECT_EQ(step_device_queue(0, 0, 7), 7);
}

TEST(EdgeQueue, ExamplesAndBudget) {
  EXPECT_EQ(step_edge_queue(5, 2, 1, 1e10, 0.1, 100.0), 4);
  EXPECT_EQ(step_edge_queue(0, 9, 0, 1e10, 0.1, 100.0), 0);
  EXPECT_THROW(step_edge_queue(5, 1e7 + 1, 0, 1e10, 0.1, 100.0), std::invalid_argument);
}

TEST(Queues, NonNegativeOnRandomInputs) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1e6);
  for (int k = 0; k < 10000; ++k) {
    EXPECT_GE(step_device_queue(u(rng), u(rng), u(rng)), 0.0);
    EXPECT_GE(step_edge_queue(u(rng), u(rng), u(rng), 1e10, 0.1, 100.0), 0.0);
  }
}

TEST(SlotFlows, InflowAndAccomplished) {
  auto f = SlotFlows::zeros(2, 2);
  f.d_local = {1.0, 2.0};
  f.d_offload(0, 1) = 3.0;
  f.d_offload(1, 1) = 4.0;
  EXPECT_EQ(f.inflow(1), 7.0);
  EXPECT_EQ(f.inflow(0), 0.0);
  EXPECT_EQ(f.accomplished_bits(), 10.0);
}

TEST(Stability, ConstantQueue) {
  std::vector<double> local(50, 5.0), edge(50, 0.0);
  const auto r = stability_metric(local, edge);
  EXPECT_DOUBLE_EQ(r.mean_local, 5.0);
  EXPECT_EQ(r.mean_edge, 0.0);
  EXPECT_NEAR(r.slope, 0.0, 1e-12);
}

TEST(Stability, LinearGrowth) {
  std::vector<double> local(100), edge(100, 0.0);
  for (std::size_t t = 0; t < 100; ++t) local[t] = static_cast<double>(t);
  const auto r = stability_metric(local, edge);
  EXPECT_NEAR(r.slope, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.mean_local, 49.5);
}

TEST(Stability, StableToyQueue) {
  Rng rng(12);
  std::poisson_distribution<int> arr(3);
  double q = 0.0;
  std::vector<double> local, edge;
  for (int t = 0; t < 20000; ++t) {
    q = step_device_queue(q, 4.0, arr(rng));
    local.push_back(q);
    edge.push_back(0.0);
  }
  const auto r = stability_metric(local, edge);
  EXPECT_LT(std::abs(r.slope), 1e-3);
  EXPECT_TRUE(r.ci_contains_zero());
}

TEST(Stability, HistoryOverloadAndEmpty) {
  std::vector<QueueState> h;
  EXPECT_THROW(stability_metric(h), std::invalid_argument);
  h.push_back({{1.0, 2.0}, {3.0}});
  h.push_back({{2.0, 2.0}, {3.0}});
  const auto r = stability_metric(h);
  EXPECT_DOUBLE_EQ(r.mean_local, 3.5);
  EXPECT_DOUBLE_EQ(r.mean_edge, 3.0);
}
