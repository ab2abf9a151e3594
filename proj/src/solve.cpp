#include "tcmarket/solve.hpp"

#include <cmath>

#include "tcmarket/lp.hpp"
#include "tcmarket/program.hpp"

namespace tcmarket {
namespace {

// Shared assembly of the LP constraint block "A x = b" from a TreeProgram,
// with room for `extra` appended columns.
lp::Problem lp_from_program(const TreeProgram& tp, int extra) {
  lp::Problem prob;
  prob.A = Eigen::MatrixXd::Zero(tp.nrow, tp.nvar + extra);
  prob.A.leftCols(tp.nvar) = Eigen::MatrixXd(tp.A);
  prob.b = tp.b;
  prob.sense.assign(tp.nrow, lp::Sense::Eq);
  prob.c = Eigen::VectorXd::Zero(tp.nvar + extra);
  prob.free_col.assign(tp.nvar + extra, 0);
  for (int j = 0; j < tp.nvar; ++j) prob.free_col[j] = tp.nonneg[j] ? 0 : 1;
  return prob;
}

void append_row(lp::Problem& prob, const Eigen::VectorXd& row, lp::Sense sense, double rhs) {
  prob.A.conservativeResize(prob.A.rows() + 1, Eigen::NoChange);
  prob.A.row(prob.A.rows() - 1) = row.transpose();
  prob.b.conservativeResize(prob.b.size() + 1);
  prob.b(prob.b.size() - 1) = rhs;
  prob.sense.push_back(sense);
}

// Largest t such that every terminal payoff can reach at least t (capped at
// 1).  Strictly positive iff the program admits a strictly positive payoff.
double feasibility_margin(const TreeProgram& tp, const MarketScenario& s) {
  lp::Problem prob = lp_from_program(tp, 1);
  const int tcol = tp.nvar;
  for (int leaf : s.tree.leaves()) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(tp.nvar + 1);
    row(tp.payoff_col[leaf]) = 1.0;
    row(tcol) = -1.0;
    append_row(prob, row, lp::Sense::Ge, 0.0);
  }
  Eigen::VectorXd cap = Eigen::VectorXd::Zero(tp.nvar + 1);
  cap(tcol) = 1.0;
  append_row(prob, cap, lp::Sense::Le, 1.0);
  prob.c(tcol) = -1.0;  // maximize t
  lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::Optimal) return 0.0;
  return sol.x(tcol);
}

// Replaces the barrier solution's payoffs by the closest exactly feasible
// ones (L1 projection), then minimizes total trade volume at those payoffs.
// Vertex solutions of the volume LP have exact zeros, which makes reported
// holdings deterministic and pin detection sharp.
Eigen::VectorXd polish_strategy(const TreeProgram& tp, const MarketScenario& s,
                                const Eigen::VectorXd& x_ipm) {
  const auto& leaves = s.tree.leaves();
  const int L = static_cast<int>(leaves.size());

  // Stage 1: min sum |f - f_ipm| / f_ipm subject to the trade equations.
  // Deviations are priced relative to the payoff size and payoffs are kept
  // above half their barrier values, so that restoring exact feasibility
  // never zeroes out a genuinely small payoff (the utility needs f > 0).
  auto restore = [&](bool floor) {
    lp::Problem p1 = lp_from_program(tp, 2 * L);
    for (int k = 0; k < L; ++k) {
      double f0 = x_ipm(tp.payoff_col[leaves[k]]);
      Eigen::VectorXd row = Eigen::VectorXd::Zero(tp.nvar + 2 * L);
      row(tp.payoff_col[leaves[k]]) = 1.0;
      row(tp.nvar + 2 * k) = -1.0;      // f = f_ipm + u - v
      row(tp.nvar + 2 * k + 1) = 1.0;
      append_row(p1, row, lp::Sense::Eq, f0);
      p1.c(tp.nvar + 2 * k) = 1.0 / std::max(f0, 1e-9);
      p1.c(tp.nvar + 2 * k + 1) = 1.0 / std::max(f0, 1e-9);
      if (floor) {
        // Keep the floor above the LP feasibility tolerance, or a
        // sub-tolerance payoff still gets rounded to exactly zero.
        Eigen::VectorXd fl = Eigen::VectorXd::Zero(tp.nvar + 2 * L);
        fl(tp.payoff_col[leaves[k]]) = 1.0;
        append_row(p1, fl, lp::Sense::Ge, std::max(0.5 * f0, 1e-8));
      }
    }
    return lp::solve(p1);
  };
  lp::Solution s1 = restore(true);
  if (s1.status != lp::Status::Optimal) s1 = restore(false);
  if (s1.status != lp::Status::Optimal)
    fail("NotConverged", "payoff restoration LP failed");

  // Stage 2: fix the payoffs, minimize total volume.
  lp::Problem p2 = lp_from_program(tp, 0);
  for (int k = 0; k < L; ++k) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(tp.nvar);
    row(tp.payoff_col[leaves[k]]) = 1.0;
    append_row(p2, row, lp::Sense::Eq, s1.x(tp.payoff_col[leaves[k]]));
  }
  for (int id = 0; id < s.tree.size(); ++id) {
    for (int c = tp.trade0[id]; c < tp.trade0[id] + s.d * (s.d - 1); ++c) p2.c(c) = 1.0;
    for (int c = tp.disp0[id]; c < tp.disp0[id] + s.d; ++c) p2.c(c) = 1.0;
  }
  lp::Solution s2 = lp::solve(p2);
  if (s2.status != lp::Status::Optimal)
    fail("NotConverged", "volume minimization LP failed");
  return s2.x;
}

}  // namespace

SolveReport solve(const MarketScenario& s, const SolveOptions& opt) {
  TreeProgram tp = build_tree_program(s);

  if (feasibility_margin(tp, s) <= 1e-11)
    fail("Infeasible", "no strategy reaches a strictly positive terminal payoff");

  ipm::Problem ip;
  ip.nvar = tp.nvar;
  ip.A = tp.A;
  ip.b = tp.b;
  ip.utilities = tp.utilities;
  ip.nonneg = tp.nonneg;
  double scale = std::max(0.5, s.endowment.cwiseAbs().maxCoeff()) * opt.init_scale;

  // Polish, evaluate and certify one barrier iterate.  Throws when the
  // strategy cannot be repaired or the certified duality gap stays above
  // tolerance -- those gates are the actual acceptance criteria.
  auto finish = [&](const ipm::Result& ir) {
    Eigen::VectorXd x = polish_strategy(tp, s, ir.x);

    SolveReport r;
    r.strategy = tp.unpack(s, x);
    r.value = 0.0;
    for (int leaf : s.tree.leaves()) {
      if (!(r.strategy.payoff[leaf] > 0.0))
        fail("NotConverged", "polishing lost strict positivity of a terminal payoff");
      r.value += s.tree.nodes[leaf].prob * s.utility.value(r.strategy.payoff[leaf]);
    }

    r.node_duals.resize(s.tree.size());
    for (int id = 0; id < s.tree.size(); ++id)
      r.node_duals[id] = ir.y.segment(tp.row0[id], s.d);
    r.superdifferential = r.node_duals[0];

    // Duality gap via the conjugate bound at the dual variables: for any
    // feasible payoff W, E[U(W)] <= E[U*(z1_T)] + z_root . x with z the
    // probability-deflated duals.
    double conj = 0.0;
    for (int leaf : s.tree.leaves()) {
      double prob = s.tree.nodes[leaf].prob;
      double z1 = ir.y(tp.row0[leaf]) / prob;
      conj += prob * s.utility.conjugate(std::max(z1, 1e-300));
    }
    double bound = conj + r.node_duals[0].dot(s.endowment);
    r.gap = std::max(bound - r.value, 0.0);
    r.tol_gap = opt.tol_gap * (1.0 + std::abs(r.value));
    if (!(r.gap <= r.tol_gap))
      fail("NotConverged", "duality gap " + std::to_string(r.gap) + " exceeds tolerance " +
                               std::to_string(r.tol_gap));
    return r;
  };

  // Run the full pipeline from a few interior starting points: an unlucky
  // start can stall the barrier loop or leave an iterate the polisher cannot
  // repair, and a restart from a different scale usually resolves both.
  // Stalled runs still reach `finish`, since a near-optimal iterate passes
  // the gap test on its own merits.
  std::exception_ptr last;
  for (double spread : {1.0, 8.0, 1.0 / 8.0, 64.0}) {
    ip.x0 = Eigen::VectorXd::Constant(tp.nvar, scale * spread);
    ipm::Result ir = ipm::maximize(ip);
    if (ir.status == ipm::Status::Unbounded)
      fail("Unbounded", "utility grows without bound (no supermartingale price system?)");
    try {
      return finish(ir);
    } catch (const Error&) {
      last = std::current_exception();
    }
  }
  std::rethrow_exception(last);
}

double conditional_value(const MarketScenario& s, const Strategy& v, int node) {
  if (s.tree.is_leaf(node))
    return s.utility.value(liquidation_value(s.bid_ask[node], v.holdings[node]));
  MarketScenario sub = subscenario(s, node, v.holdings[node]);
  return solve(sub).value;
}

double check_dpp(const MarketScenario& s, const SolveReport& r) {
  std::vector<double> cv(s.tree.size(), 0.0);
  for (int id = 0; id < s.tree.size(); ++id) cv[id] = conditional_value(s, r.strategy, id);
  double dev = 0.0;
  for (int id = 0; id < s.tree.size(); ++id) {
    if (s.tree.is_leaf(id)) continue;
    dev = std::max(dev, std::abs(cv[id] - conditional_expectation(s.tree, cv, id)));
  }
  return dev;
}

}  // namespace tcmarket
