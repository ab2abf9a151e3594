#include "tcmarket/bidask.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tcmarket/lp.hpp"

namespace tcmarket {
namespace {

std::string entry(int i, int j) {  // 1-based asset labels in messages
  return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

// Feasibility/liquidation LPs share one constraint block: for decision
// variables (buys, disposals) the equation
//   sum_j buys(i,j) * pi(i,j) - sum_k buys(k,i) + disposals(i) = v(i)
// states that v is the cone decomposition of the trade.  Columns are laid out
// as the d*(d-1) off-diagonal buys entries (row-major) followed by d
// disposals; `extra` appends caller-specific columns.
struct ConeBlock {
  int d;
  int n_buys;
  int n_cols;

  explicit ConeBlock(int dim, int extra) : d(dim), n_buys(dim * (dim - 1)), n_cols(n_buys + dim + extra) {}

  int buy_col(int i, int j) const {  // i != j
    int off = i * (d - 1) + (j < i ? j : j - 1);
    return off;
  }
  int disposal_col(int i) const { return n_buys + i; }
  int extra_col(int k) const { return n_buys + d + k; }

  void fill(const BidAskMatrix& pi, Eigen::MatrixXd& A) const {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        A(i, buy_col(i, j)) += pi.pi(i, j);
        A(j, buy_col(i, j)) -= 1.0;
      }
      A(i, disposal_col(i)) = 1.0;
    }
  }

  TradeVector unpack(const Eigen::VectorXd& x) const {
    TradeVector t = TradeVector::zero(d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j)
        if (i != j) t.buys(i, j) = x(buy_col(i, j));
      t.disposals(i) = x(disposal_col(i));
    }
    return t;
  }
};

}  // namespace

BidAskMatrix validate_bid_ask(const Eigen::MatrixXd& pi) {
  if (pi.rows() != pi.cols() || pi.rows() < 1)
    fail("ParameterError", "bid-ask matrix must be square and nonempty");
  const int d = static_cast<int>(pi.rows());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double v = pi(i, j);
      if (!(v > 0.0) || !std::isfinite(v))
        fail("NonPositiveEntry", "pi" + entry(i, j) + " = " + std::to_string(v));
    }
    if (pi(i, i) != 1.0)
      fail("DiagonalNotOne", "pi" + entry(i, i) + " = " + std::to_string(pi(i, i)));
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      for (int k = 0; k < d; ++k) {
        if (k == i || k == j) continue;
        double chain = pi(i, k) * pi(k, j);
        if (pi(i, j) > chain * (1.0 + BidAskMatrix::kTriangleSlack))
          fail("TriangleViolation", "pi" + entry(i, j) + " > pi" + entry(i, k) + " * pi" + entry(k, j));
      }
    }
  return BidAskMatrix{d, pi};
}

BidAskMatrix from_price_and_costs(const Eigen::VectorXd& price, const Eigen::MatrixXd& costs) {
  const int d = static_cast<int>(price.size());
  if (costs.rows() != d || costs.cols() != d)
    fail("ParameterError", "cost matrix shape does not match price vector");
  for (int i = 0; i < d; ++i) {
    if (!(price(i) > 0.0) || !std::isfinite(price(i)))
      fail("ParameterError", "price " + std::to_string(i) + " must be positive");
    if (costs(i, i) != 0.0)
      fail("ParameterError", "cost diagonal must be zero");
  }
  Eigen::MatrixXd pi(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (!(costs(i, j) >= 0.0))
        fail("ParameterError", "cost" + entry(i, j) + " must be nonnegative");
      pi(i, j) = (i == j) ? 1.0 : (1.0 + costs(i, j)) * price(j) / price(i);
    }
  return validate_bid_ask(pi);
}

TradeVector TradeVector::zero(int d) {
  return TradeVector{Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d)};
}

Eigen::VectorXd TradeVector::net(const BidAskMatrix& pi) const {
  Eigen::VectorXd dv = -disposals;
  for (int i = 0; i < pi.d; ++i)
    for (int j = 0; j < pi.d; ++j) {
      if (i == j) continue;
      double q = buys(i, j);
      if (q == 0.0) continue;
      dv(j) += q;
      dv(i) -= q * pi.pi(i, j);
    }
  return dv;
}

double TradeVector::total_volume() const {
  return buys.sum() + disposals.sum();
}

void TradeVector::validate(int d) const {
  if (buys.rows() != d || buys.cols() != d || disposals.size() != d)
    fail("ParameterError", "trade vector shape does not match dimension");
  for (int i = 0; i < d; ++i) {
    if (buys(i, i) != 0.0) fail("ParameterError", "trade diagonal must be zero");
    if (!(disposals(i) >= 0.0)) fail("ParameterError", "disposals must be nonnegative");
    for (int j = 0; j < d; ++j)
      if (!(buys(i, j) >= 0.0)) fail("ParameterError", "buys must be nonnegative");
  }
}

ConeWitness cone_witness(const BidAskMatrix& pi, const Eigen::VectorXd& v, double tol) {
  const int d = pi.d;
  if (v.size() != d) fail("ParameterError", "vector dimension mismatch");
  ConeBlock blk(d, 0);

  // Minimize the L1 equation residual: A x + r+ - r- = v with r+, r- >= 0.
  lp::Problem prob;
  int n = blk.n_cols + 2 * d;
  prob.A = Eigen::MatrixXd::Zero(d, n);
  blk.fill(pi, prob.A);
  for (int i = 0; i < d; ++i) {
    prob.A(i, blk.n_cols + i) = 1.0;
    prob.A(i, blk.n_cols + d + i) = -1.0;
  }
  prob.b = v;
  prob.sense.assign(d, lp::Sense::Eq);
  prob.c = Eigen::VectorXd::Zero(n);
  prob.c.tail(2 * d).setOnes();

  lp::Solution sol = lp::solve(prob);
  ConeWitness w;
  if (sol.status != lp::Status::Optimal) return w;  // cannot happen: always feasible
  w.residual = sol.objective;
  w.contained = sol.objective <= tol;
  if (w.contained) w.decomposition = blk.unpack(sol.x);
  return w;
}

bool cone_contains(const BidAskMatrix& pi, const Eigen::VectorXd& v, double tol) {
  return cone_witness(pi, v, tol).contained;
}

bool polar_contains(const BidAskMatrix& pi, const Eigen::VectorXd& z) {
  const int d = pi.d;
  if (z.size() != d) fail("ParameterError", "vector dimension mismatch");
  for (int i = 0; i < d; ++i)
    if (!(z(i) >= 0.0)) return false;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (pi.pi(i, j) * z(i) < z(j)) return false;
    }
  return true;
}

PolarPosition polar_strictly_contains(const BidAskMatrix& pi, const Eigen::VectorXd& z) {
  const int d = pi.d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && pi.frictionless_pair(i, j)) return PolarPosition::InteriorEmpty;
  if (!polar_contains(pi, z)) return PolarPosition::Outside;
  for (int i = 0; i < d; ++i)
    if (!(z(i) > 0.0)) return PolarPosition::Boundary;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (!(pi.pi(i, j) * z(i) > z(j))) return PolarPosition::Boundary;
    }
  return PolarPosition::Interior;
}

double polar_relative_margin(const BidAskMatrix& pi, const Eigen::VectorXd& z) {
  const int d = pi.d;
  double margin = std::numeric_limits<double>::infinity();
  double zmax = z.cwiseAbs().maxCoeff();
  if (zmax <= 0.0) return -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) margin = std::min(margin, z(i) / zmax);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j || pi.frictionless_pair(i, j)) continue;
      double ref = pi.pi(i, j) * z(i);
      if (ref <= 0.0) return -std::numeric_limits<double>::infinity();
      margin = std::min(margin, (ref - z(j)) / ref);
    }
  return margin;
}

double liquidation_value(const BidAskMatrix& pi, const Eigen::VectorXd& v) {
  const int d = pi.d;
  if (v.size() != d) fail("ParameterError", "vector dimension mismatch");
  if (d == 1) return v(0);  // single asset: nothing to trade

  // max alpha s.t. v - alpha e_1 = A (buys, disposals): one extra column.
  ConeBlock blk(d, 1);
  lp::Problem prob;
  prob.A = Eigen::MatrixXd::Zero(d, blk.n_cols);
  blk.fill(pi, prob.A);
  prob.A(0, blk.extra_col(0)) = 1.0;  // alpha enters the asset-1 equation
  prob.b = v;
  prob.sense.assign(d, lp::Sense::Eq);
  prob.c = Eigen::VectorXd::Zero(blk.n_cols);
  prob.c(blk.extra_col(0)) = -1.0;  // maximize alpha
  prob.free_col.assign(blk.n_cols, 0);
  prob.free_col[blk.extra_col(0)] = 1;

  lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::Optimal)
    fail("ParameterError", "liquidation LP did not solve; invalid bid-ask matrix?");
  return sol.x(blk.extra_col(0));
}

}  // namespace tcmarket
