#pragma once

#include <Eigen/Sparse>

#include <vector>

#include "tcmarket/ipm.hpp"
#include "tcmarket/scenario.hpp"

namespace tcmarket {

// Trade-space formulation of the utility maximization on a scenario tree.
//
// Variables per node: the off-diagonal buys entries and d disposals of that
// node's TradeVector; additionally d post-trade holdings per internal node
// and one terminal payoff per leaf.  Equality rows per node n and asset i:
//
//   V_n - V_parent(n) - net_n(buys, disposals) = 0          (internal)
//   f_n e_1 - V_parent(n) - net_n(buys, disposals) = 0      (leaf)
//
// with V_parent(root) replaced by the endowment on the right-hand side.
// Holdings are nonnegative in no_short mode and free otherwise; buys,
// disposals and payoffs are always nonnegative.  The objective is
// sum_leaves P(leaf) * U(f_leaf).
struct TreeProgram {
  int d = 0;
  int nvar = 0;
  int nrow = 0;
  std::vector<int> trade0;  // per node: first buys column
  std::vector<int> disp0;   // per node: first disposals column
  std::vector<int> hold0;   // per internal node: first holdings column; -1 at leaves
  std::vector<int> payoff_col;  // per leaf: payoff column; -1 elsewhere
  std::vector<int> row0;        // per node: first equality row

  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<char> nonneg;
  std::vector<ipm::UtilityTerm> utilities;

  int buy_col(int node, int i, int j) const {  // i != j
    return trade0[node] + i * (d - 1) + (j < i ? j : j - 1);
  }

  // Reassembles a Strategy (holdings, payoffs, trades) from a variable vector.
  Strategy unpack(const MarketScenario& s, const Eigen::VectorXd& x) const;
};

TreeProgram build_tree_program(const MarketScenario& s);

// The scenario obtained by re-rooting at `node` with initial holdings
// `endowment`: times shift to start at 0, probabilities are conditioned on
// reaching the node, matrices and utility carry over.  Endowment
// admissibility is deliberately not enforced (intermediate holdings of a
// legal strategy may fail the root-level admissibility test).
MarketScenario subscenario(const MarketScenario& s, int node, const Eigen::VectorXd& endowment);

}  // namespace tcmarket
