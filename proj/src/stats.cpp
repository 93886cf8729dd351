#include "dtwin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace dtwin::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double v : xs) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit needs two equally sized samples of length >= 2");
  const auto n = x.size();
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit needs distinct x values");

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  std::vector<double> resid(n);
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    resid[k] = y[k] - fit.intercept - fit.slope * x[k];
    sse += resid[k] * resid[k];
  }
  fit.stderr_ols = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;

  // Newey-West long-run variance of (x - mx) * e.
  const auto lag = static_cast<std::size_t>(
      std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
  fit.hac_lag = lag;
  std::vector<double> u(n);
  for (std::size_t k = 0; k < n; ++k) u[k] = (x[k] - mx) * resid[k];
  double s = 0.0;
  for (double v : u) s += v * v;
  for (std::size_t l = 1; l <= lag && l < n; ++l) {
    const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lag + 1);
    double acc = 0.0;
    for (std::size_t k = l; k < n; ++k) acc += u[k] * u[k - l];
    s += 2.0 * w * acc;
  }
  fit.stderr_hac = std::sqrt(std::max(s, 0.0)) / sxx;
  return fit;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t k = 0;
  while (k < idx.size()) {
    std::size_t e = k;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
    const double avg = (static_cast<double>(k) + static_cast<double>(e)) / 2.0 + 1.0;
    for (std::size_t q = k; q <= e; ++q) r[idx[q]] = avg;
    k = e + 1;
  }
  return r;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman needs two equally sized samples of length >= 2");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired_t_test needs two equally sized samples of length >= 2");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  PairedTest out;
  out.mean_diff = mean(d);
  out.dof = static_cast<double>(d.size() - 1);
  const double se = sample_stddev(d) / std::sqrt(static_cast<double>(d.size()));
  if (se == 0.0) {
    out.t = out.mean_diff == 0.0 ? 0.0 : std::copysign(INFINITY, out.mean_diff);
    out.p_two_sided = out.mean_diff == 0.0 ? 1.0 : 0.0;
    out.p_less = out.mean_diff < 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.t = out.mean_diff / se;
  boost::math::students_t dist(out.dof);
  out.p_less = boost::math::cdf(dist, out.t);
  out.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  return out;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

}  // namespace dtwin::stats
