#include <cmath>

#include <gtest/gtest.h>

#include "dtwin/stats.hpp"

using namespace dtwin;

TEST(Stats, MeanAndStddev) {
  const std::vector<double> x = {2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(stats::mean(x), 5.0);
  EXPECT_NEAR(stats::sample_stddev(x), std::sqrt(32.0 / 7.0), 1e-12);
}

TEST(Stats, LinearFitExactLine) {
  std::vector<double> x, y;
  for (int t = 0; t < 20; ++t) {
    x.push_back(t);
    y.push_back(3.0 - 0.5 * t);
  }
  const auto f = stats::linear_fit(x, y);
  EXPECT_NEAR(f.slope, -0.5, 1e-12);
  EXPECT_NEAR(f.intercept, 3.0, 1e-12);
  EXPECT_NEAR(f.stderr_ols, 0.0, 1e-9);
  const std::vector<double> same = {1, 1, 1};
  EXPECT_THROW(stats::linear_fit(same, same), std::invalid_argument);
}

TEST(Stats, SpearmanRanks) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::spearman(x, std::vector<double>{10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(stats::spearman(x, std::vector<double>{4, 3, 2, 1}), -1.0);
  EXPECT_DOUBLE_EQ(stats::spearman(x, std::vector<double>{1, 100, 1000, 5000}), 1.0);
  // Ranks 1, 2.5, 2.5, 4 against 1..4.
  EXPECT_NEAR(stats::spearman(x, std::vector<double>{1, 5, 5, 9}), 4.5 / std::sqrt(5.0 * 4.5), 1e-12);
}

TEST(Stats, PairedTTest) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 2, 4, 4, 7};
  const auto r = stats::paired_t_test(a, b);
  EXPECT_DOUBLE_EQ(r.mean_diff, -0.8);
  EXPECT_NEAR(r.t, -0.8 / (std::sqrt(0.7) / std::sqrt(5.0)), 1e-12);
  EXPECT_EQ(r.dof, 4.0);
  EXPECT_NEAR(r.p_two_sided, 0.0993, 5e-4);
  EXPECT_NEAR(r.p_less, r.p_two_sided / 2.0, 1e-12);
}

TEST(Stats, NormalQuantile) {
  EXPECT_NEAR(stats::normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(stats::normal_quantile(0.5), 0.0, 1e-15);
}
