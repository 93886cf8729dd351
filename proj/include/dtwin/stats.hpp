#pragma once

#include <span>

namespace dtwin::stats {

double mean(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ols = 0.0;
  double stderr_hac = 0.0;  // Newey-West with Bartlett kernel
  std::size_t hac_lag = 0;
};

/// Ordinary least squares y = a + b x. Requires at least two distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct PairedTest {
  double mean_diff = 0.0;
  double t = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
  double p_less = 1.0;  // H1: mean(a - b) < 0
};

/// Paired Student t-test on a - b.
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

double normal_quantile(double p);

}  // namespace dtwin::stats
