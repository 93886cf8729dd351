#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "dtwin/config.hpp"
#include "dtwin/env.hpp"

namespace dtwin {

struct SchemeSpec {
  Scheme tag = Scheme::joint;
  bool learns = true;
  std::string mask;  // which raw-action blocks are pinned
};

SchemeSpec scheme_spec(Scheme s);

/// Pins the scheme's fixed blocks of a raw action before projection.
/// no-compute-alloc: equal edge-compute split, full local CPU, full edge departure.
/// no-radio-alloc: full power, equal bandwidth split.
void apply_scheme_mask(Scheme s, std::span<double> u, const Topology& topo);

/// 1 for raw-action coordinates the scheme leaves to the policy, 0 for pinned ones.
Eigen::VectorXd active_dims(Scheme s, const ActionLayout& layout);

}  // namespace dtwin
