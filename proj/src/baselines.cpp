#include "dtwin/baselines.hpp"

#include <limits>

namespace dtwin {

std::vector<double> random_raw_action(const ActionLayout& layout, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(layout.size());
  for (auto& v : u) v = unif(rng);
  return u;
}

std::vector<double> greedy_drift_action(const Env& env, const GreedyOptions& opt) {
  const auto lay = env.action_layout();
  std::vector<double> u(lay.size(), 1.0);
  auto cost = [&](const std::vector<double>& x) { return env.simulate(env.project(x)).objective.total; };
  double best = cost(u);
  const auto coords = relevant_coordinates(env.topology());
  for (std::size_t pass = 0; pass < opt.passes; ++pass) {
    bool improved = false;
    for (auto k : coords) {
      const double keep = u[k];
      double best_v = keep;
      for (double g : opt.grid) {
        if (g == keep) continue;
        u[k] = g;
        const double c = cost(u);
        if (c < best) {
          best = c;
          best_v = g;
          improved = true;
        }
      }
      u[k] = best_v;
    }
    if (!improved) break;
  }
  return u;
}

}  // namespace dtwin
