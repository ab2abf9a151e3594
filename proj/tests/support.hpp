#pragma once

#include <random>

#include "tcmarket/scenario.hpp"

namespace tcmarket::testsupport {

struct GenOptions {
  int d_min = 2, d_max = 4;
  int horizon_min = 1, horizon_max = 3;
  int branch_max = 3;
  int max_nodes = 36;
  double cost_min = 0.1, cost_max = 0.2;  // proportional cost range
  bool allow_power = true;
  Mode mode = Mode::NoShort;
};

// Seeded random market: random tree shape, per-asset random-walk reference
// prices with proportional costs in [cost_min, cost_max] (always triangle
// consistent), random positive endowment, log or power utility.
MarketScenario random_scenario(std::mt19937& rng, const GenOptions& opt = {});

// Random admissible strategy: a few random affordable exchanges and small
// disposals at each node, keeping holdings nonnegative; leaves carry their
// full liquidation value as payoff.
Strategy random_strategy(const MarketScenario& s, std::mt19937& rng);

}  // namespace tcmarket::testsupport
