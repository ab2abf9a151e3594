#pragma once

#include <Eigen/Dense>

#include <vector>

#include "tcmarket/scenario.hpp"

namespace tcmarket {

struct SolveReport {
  double value = 0.0;       // J = E[U(f)] of the reported strategy
  Strategy strategy;        // optimal holdings, trades, terminal payoffs
  std::vector<Eigen::VectorXd> node_duals;  // per node: multipliers on the
                                            // holdings-evolution equalities
  double gap = 0.0;         // certified duality gap (>= 0)
  Eigen::VectorXd superdifferential;  // marginal value of the endowment
  double tol_gap = 0.0;     // success threshold that was applied
};

struct SolveOptions {
  double tol_gap = 1e-7;    // success requires gap <= tol_gap * (1 + |J|)
  double init_scale = 1.0;  // scales the interior starting point (determinism
                            // check: different starts, same payoff)
};

// Maximizes expected terminal utility over self-financing strategies (with
// holdings >= 0 in no_short mode).  A feasibility LP first certifies that a
// strictly positive payoff is reachable (else Error "Infeasible").  The
// barrier solver produces primal and dual iterates; the duality gap
//   E[U*(z1_T)] + z_root . x - J
// is evaluated at the dual variables and must pass the tolerance (else
// "NotConverged"); divergence reports "Unbounded".  Among the possibly many
// optimal holdings processes, the reported one minimizes total trade volume
// (secondary LP at fixed terminal payoffs), making output deterministic.
SolveReport solve(const MarketScenario& s, const SolveOptions& opt = {});

// Optimal value of the subproblem rooted at `node` with initial holdings
// v.holdings[node] (the tail utility of the strategy, with re-trading allowed
// from that node on).  At a leaf this is U(liquidation payoff).
double conditional_value(const MarketScenario& s, const Strategy& v, int node);

// Max over internal nodes of |J(V,node) - E[J(V,child) | node]| for the solved
// strategy; small iff the conditional value process is a martingale along the
// optimum (dynamic programming principle).
double check_dpp(const MarketScenario& s, const SolveReport& r);

// Exhaustive-search oracle for two-asset trees with horizon <= 2: per-node
// net risky-position changes are discretized with step `grid` on an interval
// derived from the endowment's liquidation bound, leaves are liquidated in
// closed form.  Independent of the LP/barrier machinery.  Throws "TooLarge"
// beyond the supported size.
double brute_force_value(const MarketScenario& s, double grid);

}  // namespace tcmarket
