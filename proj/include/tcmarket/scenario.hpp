#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "tcmarket/bidask.hpp"
#include "tcmarket/tree.hpp"
#include "tcmarket/utility.hpp"

namespace tcmarket {

enum class Mode { NoShort, Unconstrained };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);  // throws ParseError

// A complete market instance: event tree, one bid-ask matrix per node, the
// initial endowment, the utility to maximize, and the trading constraint
// regime.  Immutable after construction/loading.
struct MarketScenario {
  EventTree tree;
  std::vector<BidAskMatrix> bid_ask;  // by node id
  int d = 0;
  Mode mode = Mode::NoShort;
  Utility utility;
  Eigen::VectorXd endowment;

  // Optional frictionless price vectors by node id (used by the arbitrage
  // detector); empty when the scenario file carries none.
  std::vector<Eigen::VectorXd> node_prices;

  bool has_prices() const { return !node_prices.empty(); }
};

// Enforces all scenario invariants: matrix validity and uniform dimension,
// endowment admissibility per mode (no_short: x >= 0, x != 0; unconstrained:
// strictly positive liquidation value at the root), price map shape if
// present.  Throws Error("ValidationError"/...) naming the first violation.
// `check_endowment = false` is used internally for subproblems rooted at
// intermediate nodes, whose initial holdings need not be liquidatable yet.
void validate_scenario(const MarketScenario& s, bool check_endowment = true);

// Canonical JSON serialization.  All real numbers are rendered as decimal
// strings with 17 significant digits and parsed back to the identical double,
// so save/load round-trips are exact and byte-identical.
std::string save_scenario(const MarketScenario& s);
MarketScenario load_scenario(const std::string& text);  // ParseError | ValidationError

// Two-asset market with one safe and one risky asset over times 0,1,2.  The
// risky bid price falls deterministically 3 -> 2 -> 1 while the ask is 3 at
// time 0, 2+k on the time-1 branch k (k = 0..kmax) and then either 3+k or 1
// at time 2.  Branch probabilities are the exact dyadics 2^-(n+k); the tail
// mass of branches beyond kmax, 2^-(n+kmax-1), is lumped onto branch kmax.
// Throws Error("ParameterError") for n < 1, kmax < 1 or probabilities
// leaving (0,1).
MarketScenario build_counterexample(int n, int kmax, const Eigen::Vector2d& x, Mode mode,
                                    const Utility& u = Utility::log());

// Self-financing trading plan on a scenario tree.  holdings[n] is the
// post-trade position at node n; payoff[leaf] the amount of asset 1 obtained
// by terminal liquidation.  `trades`, when present, decomposes each node's
// increment into buys/disposals at that node's matrix.
struct Strategy {
  std::vector<Eigen::VectorXd> holdings;  // by node id
  std::vector<double> payoff;             // by node id; meaningful at leaves
  std::vector<TradeVector> trades;        // optional, by node id (empty = absent)
};

struct TradeViolation {
  int node = -1;
  std::string what;
  double residual = 0.0;
};

struct TradeReport {
  bool self_financing = true;  // every increment lies in -K at its node
  bool admissible = true;      // mode constraints + positive terminal payoff
  std::vector<TradeVector> witnesses;  // per node, cone decompositions found
  std::vector<TradeViolation> violations;
  double max_residual = 0.0;  // largest cone-membership residual over nodes

  bool ok() const { return self_financing && admissible; }
};

// Checks that v is self-financing (each increment, including the root's
// move away from the endowment, lies in -K at the node's matrix within
// `tol`), that no_short scenarios keep holdings nonnegative, and that each
// leaf's claimed payoff is positive and covered by the leaf's liquidation
// value.  Violations are report content, not errors.
TradeReport check_self_financing(const MarketScenario& s, const Strategy& v, double tol = 1e-9);

}  // namespace tcmarket
