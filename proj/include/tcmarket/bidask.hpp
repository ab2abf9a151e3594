#pragma once

#include <Eigen/Dense>

#include "tcmarket/errors.hpp"

namespace tcmarket {

// Bid-ask matrix for a d-asset market.  Entry pi(i, j) is the number of units
// of asset i that must be paid to receive one unit of asset j.  A valid matrix
// has positive entries, unit diagonal, and satisfies the triangle inequality
//   pi(i, j) <= pi(i, k) * pi(k, j)
// (a direct exchange is never more expensive than a chain of exchanges).
struct BidAskMatrix {
  int d = 0;
  Eigen::MatrixXd pi;

  // Quoted interval for one unit of asset j in units of asset i:
  // [1 / pi(j, i), pi(i, j)] = [bid, ask].
  double ask(int i, int j) const { return pi(i, j); }
  double bid(int i, int j) const { return 1.0 / pi(j, i); }

  // True when exchanging i -> j -> i has no round-trip loss, i.e.
  // pi(i, j) * pi(j, i) == 1 up to a 1e-12 relative slack.  Such a pair quotes
  // a single price and the polar cone of the solvency cone has empty interior.
  bool frictionless_pair(int i, int j) const {
    return pi(i, j) * pi(j, i) <= 1.0 + kTriangleSlack;
  }

  static constexpr double kTriangleSlack = 1e-12;
};

// Validates the three bid-ask axioms and returns the wrapped matrix.
// Throws Error with code NonPositiveEntry, DiagonalNotOne (exact comparisons)
// or TriangleViolation (relative slack 1e-12, so matrices assembled in
// floating point from consistent quotes are not rejected).
BidAskMatrix validate_bid_ask(const Eigen::MatrixXd& pi);

// Builds pi(i, j) = (1 + costs(i, j)) * price(j) / price(i) from strictly
// positive reference prices and nonnegative proportional costs (zero
// diagonal), then validates.  Throws ParameterError on bad inputs and
// TriangleViolation when the cost structure is inconsistent.
BidAskMatrix from_price_and_costs(const Eigen::VectorXd& price, const Eigen::MatrixXd& costs);

// One round of trading at a single node.  buys(i, j) >= 0 is the number of
// units of asset j acquired against asset i (costing pi(i, j) per unit);
// disposals(i) >= 0 is free disposal of asset i.  The resulting change of the
// holdings vector is net(), an element of -K(pi) by construction.
struct TradeVector {
  Eigen::MatrixXd buys;       // d x d, zero diagonal
  Eigen::VectorXd disposals;  // d

  static TradeVector zero(int d);

  // Change of holdings: sum_{i != j} buys(i,j) * (e_j - pi(i,j) e_i) - disposals.
  Eigen::VectorXd net(const BidAskMatrix& pi) const;

  double total_volume() const;  // sum of all buys and disposals

  // Throws ParameterError unless the shape matches d and all entries are
  // nonnegative with a zero diagonal.
  void validate(int d) const;
};

// Membership of v in the solvency cone K(pi), the set of holdings that can be
// traded to the zero portfolio (equivalently: v = sum buys(i,j) * (pi(i,j) e_i
// - e_j) + disposals for some nonnegative decomposition).  Decided by a small
// feasibility LP; `tol` bounds the admissible total equation residual
// (absolute).
bool cone_contains(const BidAskMatrix& pi, const Eigen::VectorXd& v, double tol = 1e-9);

// As cone_contains, but also returns a witness decomposition when the answer
// is positive.
struct ConeWitness {
  bool contained = false;
  TradeVector decomposition;  // valid when contained
  double residual = 0.0;      // max-norm equation residual of the witness
};
ConeWitness cone_witness(const BidAskMatrix& pi, const Eigen::VectorXd& v, double tol = 1e-9);

// Membership of z in the polar cone K*(pi) = { z >= 0 : pi(i,j) z_i >= z_j }.
// Pure inequality evaluation, no tolerance.
bool polar_contains(const BidAskMatrix& pi, const Eigen::VectorXd& z);

enum class PolarPosition {
  Interior,       // all inequalities strict, z strictly positive
  Boundary,       // contained, but some inequality tight
  Outside,        // not contained
  InteriorEmpty,  // some frictionless pair: the polar cone has no interior
};

// Classifies z against K*(pi).  When the matrix quotes any frictionless pair
// the interior is empty and that is reported regardless of z.
PolarPosition polar_strictly_contains(const BidAskMatrix& pi, const Eigen::VectorXd& z);

// Smallest relative slack of the polar inequalities over pairs that are not
// frictionless:  min over such (i, j) of (pi(i,j) z_i - z_j) / (pi(i,j) z_i),
// and of the positivity slacks z_i / max z.  Returns +infinity when every pair
// is frictionless and z is a positive multiple of the single price vector.
// Used to quantify how strictly a price system sits inside the polar cone.
double polar_relative_margin(const BidAskMatrix& pi, const Eigen::VectorXd& z);

// Value of the holdings v when liquidated into asset 1:
//   max { alpha : v - alpha e_1 in K(pi) }.
// Solved as an LP; always finite for a valid bid-ask matrix.
double liquidation_value(const BidAskMatrix& pi, const Eigen::VectorXd& v);

}  // namespace tcmarket
