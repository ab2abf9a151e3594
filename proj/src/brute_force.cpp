#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tcmarket/solve.hpp"

namespace tcmarket {
namespace {

constexpr double kRejected = -1e100;  // infeasible branch sentinel

// Two-asset closed forms, independent of the LP machinery on purpose: this
// oracle must not share code paths with the solver it checks.
double liquidate2(const BidAskMatrix& m, double v1, double v2) {
  return v2 >= 0.0 ? v1 + v2 / m.pi(1, 0) : v1 + v2 * m.pi(0, 1);
}

// The optimal trade can hug the solvency boundary at distances far below any
// fixed lattice (a leaf of probability p tolerates a payoff of order p), so a
// plain grid search misses it at every level.  The oracle instead brackets
// the feasible window of each trade exactly -- via the piecewise-linear
// guaranteed-wealth recursion, whose zero crossings are found by bisection --
// and then runs a golden-section search for the concave utility objective
// inside the open window, down to a resolution of grid/1000.
struct Search {
  const MarketScenario& s;
  double tol;     // theta resolution of the bracketing searches
  double radius;  // unconstrained position box

  void box(int id, double v1, double v2, double& lo, double& hi) const {
    if (s.mode == Mode::NoShort) {
      lo = -v2;
      hi = v1 / s.bid_ask[id].pi(0, 1);
    } else {
      lo = -radius - v2;
      hi = radius - v2;
    }
  }

  void apply(int id, double v1, double v2, double theta, double& w1, double& w2) const {
    const auto& pi = s.bid_ask[id].pi;
    w1 = theta >= 0.0 ? v1 - theta * pi(0, 1) : v1 - theta / pi(1, 0);
    w2 = v2 + theta;
  }

  template <class F>
  double golden_max(F f, double a, double b) const {
    constexpr double kInv = 0.6180339887498949;
    double m1 = b - kInv * (b - a), m2 = a + kInv * (b - a);
    double f1 = f(m1), f2 = f(m2);
    while (b - a > tol) {
      if (f1 < f2) {
        a = m1;
        m1 = m2;
        f1 = f2;
        m2 = a + kInv * (b - a);
        f2 = f(m2);
      } else {
        b = m2;
        m2 = m1;
        f2 = f1;
        m1 = b - kInv * (b - a);
        f1 = f(m1);
      }
    }
    return std::max(f1, f2);
  }

  // Largest wealth guaranteed extractable at every reachable leaf.  Concave
  // and piecewise linear in the exchanged amount, with slopes bounded by the
  // quotes, so the golden-section maximum is reliable; a positive value
  // marks a solvency-feasible position.
  double guarantee(int id, double v1, double v2) const {
    if (s.tree.is_leaf(id)) return liquidate2(s.bid_ask[id], v1, v2);
    if (s.mode == Mode::NoShort && (v1 < 0.0 || v2 < 0.0)) return kRejected;
    double lo, hi;
    box(id, v1, v2, lo, hi);
    if (!(lo <= hi)) return kRejected;
    auto worst = [&](double theta) {
      double w1, w2;
      apply(id, v1, v2, theta, w1, w2);
      double m = std::numeric_limits<double>::infinity();
      for (int c : s.tree.nodes[id].children) m = std::min(m, guarantee(c, w1, w2));
      return m;
    };
    return golden_max(worst, lo, hi);
  }

  double node_value(int id, double v1, double v2) const {
    if (s.tree.is_leaf(id)) {
      double f = liquidate2(s.bid_ask[id], v1, v2);
      if (!(f > 0.0)) return kRejected;
      return s.utility.value(f);
    }
    if (s.mode == Mode::NoShort && (v1 < 0.0 || v2 < 0.0)) return kRejected;
    double lo, hi;
    box(id, v1, v2, lo, hi);
    if (!(lo <= hi)) return kRejected;

    auto worst = [&](double theta) {
      double w1, w2;
      apply(id, v1, v2, theta, w1, w2);
      double m = std::numeric_limits<double>::infinity();
      for (int c : s.tree.nodes[id].children) m = std::min(m, guarantee(c, w1, w2));
      return m;
    };

    // Peak of the guaranteed wealth, then the feasible window's edges.
    double peak_lo = lo, peak_hi = hi;
    {
      constexpr double kInv = 0.6180339887498949;
      double a = lo, b = hi;
      double m1 = b - kInv * (b - a), m2 = a + kInv * (b - a);
      double f1 = worst(m1), f2 = worst(m2);
      while (b - a > tol) {
        if (f1 < f2) {
          a = m1;
          m1 = m2;
          f1 = f2;
          m2 = a + kInv * (b - a);
          f2 = worst(m2);
        } else {
          b = m2;
          m2 = m1;
          f2 = f1;
          m1 = b - kInv * (b - a);
          f1 = worst(m1);
        }
      }
      peak_lo = a;
      peak_hi = b;
    }
    if (!(worst(peak_lo) > 0.0 || worst(peak_hi) > 0.0)) return kRejected;
    double peak = worst(peak_lo) > worst(peak_hi) ? peak_lo : peak_hi;

    double ta = lo, tb = hi;
    if (!(worst(lo) > 0.0)) {  // left edge of {guaranteed wealth > 0}
      double a = lo, b = peak;
      for (int it = 0; it < 90 && b - a > 1e-15 * (1.0 + std::abs(b)); ++it) {
        double m = 0.5 * (a + b);
        (worst(m) > 0.0 ? b : a) = m;
      }
      ta = b;
    }
    if (!(worst(hi) > 0.0)) {  // right edge
      double a = peak, b = hi;
      for (int it = 0; it < 90 && b - a > 1e-15 * (1.0 + std::abs(b)); ++it) {
        double m = 0.5 * (a + b);
        (worst(m) > 0.0 ? a : b) = m;
      }
      tb = a;
    }

    auto objective = [&](double theta) {
      double w1, w2;
      apply(id, v1, v2, theta, w1, w2);
      double acc = 0.0;
      for (int c : s.tree.nodes[id].children) {
        double v = node_value(c, w1, w2);
        if (v == kRejected) return kRejected;
        acc += s.tree.nodes[c].cond_prob * v;
      }
      return acc;
    };
    double best = golden_max(objective, ta, tb);
    // The no-trade kink is the typical exact optimum under transaction
    // costs; probing it (and the window edges) removes the golden-section
    // resolution error in those common cases.
    for (double cand : {0.0, ta, tb})
      if (ta <= cand && cand <= tb) best = std::max(best, objective(cand));
    return best;
  }
};

}  // namespace

double brute_force_value(const MarketScenario& s, double grid) {
  if (!(grid > 0.0)) fail("ParameterError", "grid must be positive");
  if (s.d != 2) fail("TooLarge", "oracle supports two-asset scenarios only");
  if (s.tree.horizon > 2) fail("TooLarge", "oracle supports horizon <= 2");
  if (s.tree.size() > 16) fail("TooLarge", "oracle supports at most 16 nodes");

  double pimax = 1.0;
  for (const auto& m : s.bid_ask) pimax = std::max(pimax, m.pi.cwiseAbs().maxCoeff());
  Search search{s, 1e-3 * grid, 4.0 * (1.0 + s.endowment.cwiseAbs().sum()) * pimax};
  double best = search.node_value(0, s.endowment(0), s.endowment(1));
  if (best == kRejected) fail("Infeasible", "no positive payoff found on the grid");
  return best;
}

}  // namespace tcmarket
