#include "tcmarket/shadow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tcmarket/lp.hpp"
#include "tcmarket/program.hpp"

namespace tcmarket {
namespace {

constexpr double kRelTol = 1e-9;       // polar / (super)martingale verification
constexpr double kBoundaryTie = 1e-10;  // margins this close to zero are not classified

std::string node_pair(int n, int i, int j) {
  std::ostringstream os;
  os << "node " << n << ", pair (" << i + 1 << "," << j + 1 << ")";
  return os.str();
}

// Smallest relative slack (pi(i,j) z_i - z_j) / (pi(i,j) z_i) over all nodes
// and ordered pairs, clipped at zero.  This is the unit-free strictness margin
// carried by PriceSystem (+infinity for single-asset markets).
double strictness_margin(const MarketScenario& s, const std::vector<Eigen::VectorXd>& z) {
  double margin = std::numeric_limits<double>::infinity();
  for (int n = 0; n < s.tree.size(); ++n)
    for (int i = 0; i < s.d; ++i)
      for (int j = 0; j < s.d; ++j) {
        if (i == j) continue;
        double ref = std::max(s.bid_ask[n].pi(i, j) * z[n](i), 1e-300);
        margin = std::min(margin, (ref - z[n](j)) / ref);
      }
  return std::max(0.0, margin);
}

void require_system_shape(const MarketScenario& s, const PriceSystem& z) {
  if (static_cast<int>(z.z.size()) != s.tree.size())
    fail("ParameterError", "price system does not cover every node");
  for (int n = 0; n < s.tree.size(); ++n)
    if (z.z[n].size() != s.d) fail("ParameterError", "price system dimension mismatch");
}

}  // namespace

std::string to_string(SystemKind k) {
  return k == SystemKind::Martingale ? "martingale" : "supermartingale";
}

VerificationReport verify_price_system(const MarketScenario& s, const PriceSystem& z) {
  require_system_shape(s, z);
  VerificationReport rep;
  const int d = s.d;

  for (int n = 0; n < s.tree.size(); ++n) {
    const Eigen::VectorXd& v = z.z[n];
    for (int i = 0; i < d; ++i)
      if (!(v(i) > 0.0)) {
        rep.valid = false;
        rep.violations.push_back({n, "nonpositive component " + std::to_string(i + 1), -v(i)});
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        if (s.bid_ask[n].frictionless_pair(i, j)) rep.interior_empty = true;
        double lhs = s.bid_ask[n].pi(i, j) * v(i);
        double rel = (v(j) - lhs) / std::max(std::abs(lhs), 1e-300);
        if (rel > kRelTol) {
          rep.valid = false;
          rep.violations.push_back({n, "outside polar cone at " + node_pair(n, i, j), rel});
        }
        rep.max_polar_violation = std::max(rep.max_polar_violation, rel);
      }
  }
  rep.max_polar_violation = std::max(0.0, rep.max_polar_violation);

  for (int n = 0; n < s.tree.size(); ++n) {
    if (s.tree.is_leaf(n)) continue;
    Eigen::VectorXd m = conditional_expectation(s.tree, z.z, n);
    for (int i = 0; i < d; ++i) {
      double scale = 1.0 + std::abs(z.z[n](i));
      double rel = (m(i) - z.z[n](i)) / scale;  // positive = drifts upward
      double measure = z.kind == SystemKind::Martingale ? std::abs(rel) : rel;
      rep.max_martingale_violation = std::max(rep.max_martingale_violation, measure);
      if (measure > kRelTol) {
        rep.valid = false;
        rep.violations.push_back(
            {n, to_string(z.kind) + " property fails for component " + std::to_string(i + 1),
             measure});
      }
    }
  }
  rep.max_martingale_violation = std::max(0.0, rep.max_martingale_violation);
  rep.strict_margin = strictness_margin(s, z.z);
  return rep;
}

PriceSystem extract_shadow(const MarketScenario& s, const SolveReport& r, CrossCheck check) {
  if (s.mode != Mode::NoShort)
    fail("ParameterError", "marginal price extraction requires no_short mode");
  if (!(r.gap <= r.tol_gap * (1.0 + std::abs(r.value))))
    fail("NotOptimal", "duality gap exceeds tolerance; refusing to extract marginal prices");
  const int N = s.tree.size(), d = s.d;
  if (static_cast<int>(r.node_duals.size()) != N || static_cast<int>(r.strategy.payoff.size()) != N)
    fail("ParameterError", "report does not carry per-node multipliers and payoffs");

  PriceSystem ps;
  ps.kind = SystemKind::Supermartingale;
  ps.z.resize(N);
  for (int n = 0; n < N; ++n) ps.z[n] = r.node_duals[n] / s.tree.nodes[n].prob;

  // Terminal values admit closed forms; the duals are replaced by them so the
  // output satisfies the terminal conditions exactly.
  for (int l : s.tree.leaves()) {
    double up = s.utility.marginal(r.strategy.payoff[l]);
    ps.z[l](0) = up;
    for (int i = 1; i < d; ++i) ps.z[l](i) = up / s.bid_ask[l].pi(i, 0);
  }

  if (check != CrossCheck::Off) {
    std::vector<int> internal;
    for (int n = 0; n < N; ++n)
      if (!s.tree.is_leaf(n)) internal.push_back(n);
    std::vector<int> sel;
    if (check == CrossCheck::Full) {
      sel = internal;
    } else {
      // Deterministic subset: the root plus up to three evenly spaced nodes.
      sel.push_back(internal.front());
      size_t stride = std::max<size_t>(1, internal.size() / 4);
      for (size_t k = stride; k < internal.size() && sel.size() < 4; k += stride)
        sel.push_back(internal[k]);
    }
    for (int n : sel) {
      double base = conditional_value(s, r.strategy, n);
      for (int i = 0; i < d; ++i) {
        double up[2];
        const double eps[2] = {1e-4, 1e-5};
        for (int t = 0; t < 2; ++t) {
          Strategy pert = r.strategy;
          pert.holdings[n](i) += eps[t];
          up[t] = (conditional_value(s, pert, n) - base) / eps[t];
        }
        // Concavity: upward quotients grow as the step shrinks...
        if (up[1] < up[0] - 1e-4 * (1.0 + std::abs(up[0])))
          fail("CrossCheckFailure",
               "finite-difference quotients are not monotone in the step at node " +
                   std::to_string(n));
        // ...and converge to the right derivative, the smallest supergradient.
        // The dual is some supergradient of the concave tail value, so it must
        // dominate the upward quotient and, where a downward probe stays
        // feasible, be dominated by the downward one.  At kinks (no trade in
        // component i) the two enclose a genuine interval.
        double zi = ps.z[n](i);
        const double slack = 1e-3 * (0.1 + std::abs(zi));
        if (zi < up[1] - slack) {
          std::ostringstream os;
          os << "dual marginal value " << zi << " falls below the finite difference " << up[1]
             << " at node " << n << ", component " << i + 1;
          fail("CrossCheckFailure", os.str());
        }
        if (r.strategy.holdings[n](i) > 1e-3) {
          bool feasible = true;
          double dn = 0.0;
          try {
            Strategy pert = r.strategy;
            pert.holdings[n](i) -= eps[1];
            dn = (base - conditional_value(s, pert, n)) / eps[1];
          } catch (const Error&) {
            feasible = false;  // subsistence boundary: no downward probe
          }
          if (feasible && zi > dn + slack) {
            std::ostringstream os;
            os << "dual marginal value " << zi << " exceeds the finite difference " << dn
               << " at node " << n << ", component " << i + 1;
            fail("CrossCheckFailure", os.str());
          }
        }
      }
    }
  }
  ps.strict_margin = strictness_margin(s, ps.z);
  return ps;
}

ShadowCertificate certify_shadow(const MarketScenario& s, const PriceSystem& z,
                                 const SolveReport& r, double tol) {
  require_system_shape(s, z);
  ShadowCertificate c;
  TradeReport tr = check_self_financing(s, r.strategy);
  c.attainable = tr.ok();
  c.attainable_residual = tr.max_residual;

  double expected = 0.0;  // E[z^1_T f]
  for (int l : s.tree.leaves()) {
    double f = r.strategy.payoff[l];
    double up = s.utility.marginal(f);
    c.terminal_marginal_residual = std::max(
        c.terminal_marginal_residual, std::abs(z.z[l](0) - up) / std::max(std::abs(up), 1e-300));
    for (int i = 1; i < s.d; ++i) {
      // S^{z,i} must equal the liquidation rate 1/pi(i,1), i.e.
      // z_i * pi(i,1) = z_1.
      double ratio = z.z[l](i) * s.bid_ask[l].pi(i, 0) / z.z[l](0);
      c.terminal_price_residual = std::max(c.terminal_price_residual, std::abs(ratio - 1.0));
    }
    expected += s.tree.nodes[l].prob * z.z[l](0) * f;
  }
  double budget = z.z[0].dot(s.endowment);
  c.budget_residual = std::abs(expected - budget) / (1.0 + std::abs(budget));
  c.passed = c.attainable && c.terminal_marginal_residual <= tol &&
             c.terminal_price_residual <= tol && c.budget_residual <= tol;
  return c;
}

SolveReport frictionless_solve(const MarketScenario& s, const PriceSystem& z) {
  require_system_shape(s, z);
  const int N = s.tree.size(), d = s.d;
  std::vector<Eigen::VectorXd> S(N);
  for (int n = 0; n < N; ++n) S[n] = z.z[n] / z.z[n](0);

  double wealth0 = S[0].dot(s.endowment);
  if (!(wealth0 > 0.0))
    fail("Infeasible", "endowment has nonpositive value under the candidate prices");

  // One holdings vector per internal node, one terminal wealth per leaf.
  std::vector<int> theta0(N, -1), wcol(N, -1);
  int nvar = 0;
  for (int n = 0; n < N; ++n) {
    if (s.tree.is_leaf(n)) {
      wcol[n] = nvar;
      nvar += 1;
    } else {
      theta0[n] = nvar;
      nvar += d;
    }
  }

  ipm::Problem prob;
  prob.nvar = nvar;
  prob.b = Eigen::VectorXd::Zero(N);
  prob.nonneg.assign(nvar, s.mode == Mode::NoShort ? 1 : 0);
  for (int l : s.tree.leaves()) prob.nonneg[wcol[l]] = 1;

  std::vector<Eigen::Triplet<double>> trips;
  for (int n = 0; n < N; ++n) {
    int par = s.tree.nodes[n].parent;
    if (n == 0) {
      if (s.tree.is_leaf(n)) {
        trips.emplace_back(n, wcol[n], 1.0);
      } else {
        for (int i = 0; i < d; ++i) trips.emplace_back(n, theta0[n] + i, S[n](i));
      }
      prob.b(n) = wealth0;
      continue;
    }
    if (s.tree.is_leaf(n)) {
      trips.emplace_back(n, wcol[n], 1.0);
      for (int i = 0; i < d; ++i) trips.emplace_back(n, theta0[par] + i, -S[n](i));
    } else {
      for (int i = 0; i < d; ++i) {
        trips.emplace_back(n, theta0[n] + i, S[n](i));
        trips.emplace_back(n, theta0[par] + i, -S[n](i));
      }
    }
  }
  prob.A.resize(N, nvar);
  prob.A.setFromTriplets(trips.begin(), trips.end());
  for (int l : s.tree.leaves())
    prob.utilities.push_back({wcol[l], s.tree.nodes[l].prob, s.utility});
  prob.x0 = Eigen::VectorXd::Constant(nvar, std::max(0.5, wealth0));

  ipm::Result res = ipm::maximize(prob);
  if (res.status == ipm::Status::Unbounded)
    fail("Unbounded", "candidate frictionless market admits unbounded expected utility");
  if (res.status != ipm::Status::Converged)
    fail("NotConverged", "frictionless optimization did not reach tolerance");

  SolveReport rep;
  rep.tol_gap = 1e-7;
  rep.strategy.holdings.resize(N);
  rep.strategy.payoff.assign(N, 0.0);
  rep.node_duals.resize(N);
  rep.value = 0.0;
  for (int n = 0; n < N; ++n) {
    if (s.tree.is_leaf(n)) {
      double w = std::max(res.x(wcol[n]), 1e-300);
      rep.strategy.holdings[n] = Eigen::VectorXd::Zero(d);
      rep.strategy.holdings[n](0) = w;
      rep.strategy.payoff[n] = w;
      rep.value += s.tree.nodes[n].prob * s.utility.value(w);
    } else {
      rep.strategy.holdings[n] = res.x.segment(theta0[n], d);
    }
    rep.node_duals[n] = res.y(n) * S[n];
  }
  rep.superdifferential = rep.node_duals[0];

  double bound = rep.node_duals[0].dot(s.endowment) / S[0](0);
  for (int l : s.tree.leaves()) {
    double p = s.tree.nodes[l].prob;
    bound += p * s.utility.conjugate(std::max(res.y(l), 1e-300) / p);
  }
  rep.gap = std::max(0.0, bound - rep.value);
  if (rep.gap > rep.tol_gap * (1.0 + std::abs(rep.value)))
    fail("NotConverged", "frictionless duality gap exceeds tolerance");
  return rep;
}

Eigen::VectorXd value_superdifferential(const MarketScenario& s, const SolveReport& r) {
  if (s.mode != Mode::NoShort) fail("ParameterError", "marginal values require no_short mode");
  if (!(r.gap <= r.tol_gap * (1.0 + std::abs(r.value))))
    fail("NotOptimal", "duality gap exceeds tolerance");
  const int d = s.d;
  if (r.superdifferential.size() != d)
    fail("ParameterError", "report carries no endowment marginals");
  const Eigen::VectorXd& h = r.superdifferential;

  // Holding one extra unit of asset i to the horizon and liquidating it
  // bounds the marginal value from below: h_i >= E[U'(f) / pi(i,1)_T].
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(d);
  double hdotx_target = 0.0;
  for (int l : s.tree.leaves()) {
    double p = s.tree.nodes[l].prob;
    double up = s.utility.marginal(r.strategy.payoff[l]);
    lower(0) += p * up;
    for (int i = 1; i < d; ++i) lower(i) += p * up / s.bid_ask[l].pi(i, 0);
    hdotx_target += p * up * r.strategy.payoff[l];
  }
  for (int i = 0; i < d; ++i)
    if (h(i) < lower(i) - 1e-6 * (1.0 + std::abs(lower(i))))
      fail("CrossCheckFailure", "endowment marginal " + std::to_string(i + 1) +
                                    " falls below its liquidation bound");
  for (int i = 0; i < d; ++i) {
    if (h(i) < -1e-9) fail("CrossCheckFailure", "endowment marginal is negative");
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      double lhs = s.bid_ask[0].pi(i, j) * h(i);
      if (h(j) - lhs > 1e-8 * (1.0 + std::abs(lhs)))
        fail("CrossCheckFailure", "endowment marginals leave the root polar cone");
    }
  }
  double hx = h.dot(s.endowment);
  if (std::abs(hx - hdotx_target) > 1e-6 * (1.0 + std::abs(hx)))
    fail("CrossCheckFailure", "h . x does not match E[U'(f) f]");
  return h;
}

PinSet pin_constraints(const MarketScenario& s, const SolveReport& r, double tol) {
  if (r.strategy.trades.empty())
    fail("ParameterError", "strategy carries no trade decomposition");
  if (static_cast<int>(r.strategy.trades.size()) != s.tree.size())
    fail("ParameterError", "trade decomposition does not cover every node");
  PinSet pins;
  for (int n = 0; n < s.tree.size(); ++n)
    for (int i = 0; i < s.d; ++i)
      for (int j = 0; j < s.d; ++j)
        if (i != j && r.strategy.trades[n].buys(i, j) > tol) pins.push_back({n, i, j});
  return pins;
}

std::variant<PriceSystem, InfeasibilityCertificate> find_pinned_price_system(
    const MarketScenario& s, const PinSet& pins, SystemKind kind) {
  const int N = s.tree.size(), d = s.d;
  for (const Pin& p : pins)
    if (p.node < 0 || p.node >= N || p.i < 0 || p.i >= d || p.j < 0 || p.j >= d || p.i == p.j)
      fail("ParameterError", "pin indices out of range");

  auto col = [d](int n, int i) { return n * d + i; };

  // The search runs in measure-weighted variables w = P(n) z.  Conditional
  // probabilities then drop out of the flow rows (w_parent vs the plain sum
  // of w_children), which keeps every matrix entry at unit scale; path
  // probabilities as small as 2^-40 would otherwise sit next to O(1)
  // coefficients and grind the simplex down.  Polar and pin rows only relate
  // components at one node, so the weighting cancels and the rows keep their
  // usual form.
  std::vector<std::string> label;
  std::vector<Eigen::VectorXd> rows;
  std::vector<lp::Sense> senses;
  std::vector<double> rhs;
  auto add_row = [&](const Eigen::VectorXd& row, lp::Sense sense, double b, std::string what) {
    rows.push_back(row);
    senses.push_back(sense);
    rhs.push_back(b);
    label.push_back(std::move(what));
  };
  auto blank = [&] { return Eigen::VectorXd::Zero(N * d); };

  {
    Eigen::VectorXd row = blank();
    row(col(0, 0)) = 1.0;
    add_row(row, lp::Sense::Eq, 1.0, "normalization z1(root) = 1");
  }
  for (int n = 0; n < N; ++n)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        Eigen::VectorXd row = blank();
        row(col(n, i)) = s.bid_ask[n].pi(i, j);
        row(col(n, j)) = -1.0;
        add_row(row, lp::Sense::Ge, 0.0, "polar bound at " + node_pair(n, i, j));
      }
  for (const Pin& p : pins) {
    Eigen::VectorXd row = blank();
    row(col(p.node, p.i)) = s.bid_ask[p.node].pi(p.i, p.j);
    row(col(p.node, p.j)) = -1.0;
    add_row(row, lp::Sense::Eq, 0.0, "trade pin at " + node_pair(p.node, p.i, p.j));
  }
  for (int n = 0; n < N; ++n) {
    if (s.tree.is_leaf(n)) continue;
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd row = blank();
      row(col(n, i)) = 1.0;
      for (int c : s.tree.nodes[n].children) row(col(c, i)) = -1.0;
      add_row(row, kind == SystemKind::Martingale ? lp::Sense::Eq : lp::Sense::Ge, 0.0,
              to_string(kind) + " row at node " + std::to_string(n) + ", component " +
                  std::to_string(i + 1));
    }
  }

  // Feasibility with the componentwise floor z >= delta, i.e. w_n >= delta P(n).
  auto attempt = [&](double delta) -> lp::Solution {
    lp::Problem prob;
    const int extra = delta > 0.0 ? N * d : 0;
    prob.A = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()) + extra, N * d);
    prob.b = Eigen::VectorXd::Zero(prob.A.rows());
    prob.sense = senses;
    for (size_t r = 0; r < rows.size(); ++r) {
      prob.A.row(static_cast<int>(r)) = rows[r].transpose();
      prob.b(static_cast<int>(r)) = rhs[r];
    }
    if (extra > 0) {
      int r = static_cast<int>(rows.size());
      for (int n = 0; n < N; ++n)
        for (int i = 0; i < d; ++i, ++r) {
          prob.A(r, col(n, i)) = 1.0;
          prob.b(r) = delta * s.tree.nodes[n].prob;
          prob.sense.push_back(lp::Sense::Ge);
        }
    }
    prob.c = Eigen::VectorXd::Zero(N * d);
    prob.free_col.assign(N * d, 0);
    return lp::solve(prob);
  };

  lp::Solution sol = attempt(0.0);
  if (sol.status == lp::Status::Infeasible) {
    InfeasibilityCertificate cert;
    cert.lp_infeasible = true;
    cert.delta_star = 0.0;
    for (int r = 0; r < static_cast<int>(label.size()) && r < sol.farkas.size(); ++r)
      if (std::abs(sol.farkas(r)) > 1e-9) cert.farkas.emplace_back(label[r], sol.farkas(r));
    cert.detail =
        "no positive " + to_string(kind) +
        " system satisfies the pins: the listed constraints combine to a contradiction";
    return cert;
  }
  if (sol.status != lp::Status::Optimal)
    fail("NotConverged", "pinned price-system search did not terminate");

  // Highest certified-feasible floor by ladder plus bisection, as in
  // find_scps; delta_star is a feasible lower bound for the true maximum.
  const double ladder[] = {0.5,  0.2,  0.1,  0.05, 0.02, 0.01, 3e-3,
                           1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  double lo = 0.0, hi = 1.0;
  std::optional<lp::Solution> best;
  for (double delta : ladder) {
    lp::Solution at = attempt(delta);
    if (at.status == lp::Status::Optimal) {
      lo = delta;
      best = std::move(at);
      break;
    }
    hi = delta;
  }
  if (best)
    for (int it = 0; it < 10; ++it) {
      double mid = 0.5 * (lo + hi);
      lp::Solution at = attempt(mid);
      if (at.status == lp::Status::Optimal) {
        lo = mid;
        best = std::move(at);
      } else {
        hi = mid;
      }
    }

  if (!best || lo <= kBoundaryTie) {
    InfeasibilityCertificate cert;
    cert.lp_infeasible = false;
    cert.delta_star = std::max(0.0, lo);
    cert.detail = "every admissible system touches zero: the positivity floor cannot exceed " +
                  std::to_string(best ? lo : hi);
    return cert;
  }

  PriceSystem ps;
  ps.kind = kind;
  ps.delta_star = lo;
  ps.z.resize(N);
  for (int n = 0; n < N; ++n)
    ps.z[n] = best->x.segment(col(n, 0), d) / s.tree.nodes[n].prob;
  ps.strict_margin = strictness_margin(s, ps.z);
  return ps;
}

ArbitrageResult detect_arbitrage(const MarketScenario& s,
                                 const std::vector<Eigen::VectorXd>& price, Mode mode) {
  const int N = s.tree.size(), d = s.d;
  if (static_cast<int>(price.size()) != N) fail("ParameterError", "price map must cover every node");
  for (int n = 0; n < N; ++n) {
    if (price[n].size() != d) fail("ParameterError", "price vector dimension mismatch");
    if (std::abs(price[n](0) - 1.0) > 1e-12)
      fail("ParameterError", "asset 1 is the numeraire: price 1 must be 1 at every node");
    for (int i = 0; i < d; ++i)
      if (!(price[n](i) > 0.0)) fail("ParameterError", "prices must be strictly positive");
  }

  // State-price search: maximize the smallest density q_n / P(n) subject to
  // q_root = 1 and the componentwise (super)martingale identities.
  ArbitrageResult out;
  {
    lp::Problem prob;
    int rows = 1 + d * (N - static_cast<int>(s.tree.leaves().size())) + N;
    prob.A = Eigen::MatrixXd::Zero(rows, N + 1);
    prob.b = Eigen::VectorXd::Zero(rows);
    prob.sense.assign(rows, lp::Sense::Ge);
    int r = 0;
    prob.A(r, 0) = 1.0;
    prob.b(r) = 1.0;
    prob.sense[r++] = lp::Sense::Eq;
    for (int n = 0; n < N; ++n) {
      if (s.tree.is_leaf(n)) continue;
      for (int i = 0; i < d; ++i) {
        prob.A(r, n) = price[n](i);
        for (int c : s.tree.nodes[n].children) prob.A(r, c) = -price[c](i);
        prob.sense[r++] = mode == Mode::Unconstrained ? lp::Sense::Eq : lp::Sense::Ge;
      }
    }
    for (int n = 0; n < N; ++n) {
      prob.A(r, n) = 1.0;
      prob.A(r, N) = -s.tree.nodes[n].prob;
      prob.sense[r++] = lp::Sense::Ge;
    }
    prob.c = Eigen::VectorXd::Zero(N + 1);
    prob.c(N) = -1.0;
    prob.free_col.assign(N + 1, 0);

    lp::Solution sol = lp::solve(prob);
    if (sol.status == lp::Status::Optimal && -sol.objective > kBoundaryTie) {
      out.verdict = ArbitrageResult::Verdict::NoArbitrage;
      out.density_floor = -sol.objective;
      out.density.resize(N);
      for (int n = 0; n < N; ++n) out.density[n] = sol.x(n) / s.tree.nodes[n].prob;
      return out;
    }
    if (sol.status == lp::Status::Optimal) out.density_floor = std::max(0.0, -sol.objective);
  }

  // No strictly positive density: look for an explicit zero-cost strategy with
  // nonnegative terminal wealth, normalized by capping the total payoff.
  std::vector<int> theta0(N, -1), wcol(N, -1);
  int nvar = 0;
  for (int n = 0; n < N; ++n) {
    if (s.tree.is_leaf(n)) {
      wcol[n] = nvar++;
    } else {
      theta0[n] = nvar;
      nvar += d;
    }
  }
  if (theta0[0] < 0) {  // single-node tree: nothing to trade
    out.verdict = ArbitrageResult::Verdict::Boundary;
    return out;
  }

  lp::Problem prob;
  int rows = N + 1;
  prob.A = Eigen::MatrixXd::Zero(rows, nvar);
  prob.b = Eigen::VectorXd::Zero(rows);
  prob.sense.assign(rows, lp::Sense::Eq);
  for (int n = 0; n < N; ++n) {
    int par = s.tree.nodes[n].parent;
    if (n == 0) {
      for (int i = 0; i < d; ++i) prob.A(n, theta0[n] + i) = price[n](i);
    } else if (s.tree.is_leaf(n)) {
      prob.A(n, wcol[n]) = 1.0;
      for (int i = 0; i < d; ++i) prob.A(n, theta0[par] + i) = -price[n](i);
    } else {
      for (int i = 0; i < d; ++i) {
        prob.A(n, theta0[n] + i) = price[n](i);
        prob.A(n, theta0[par] + i) = -price[n](i);
      }
    }
  }
  for (int l : s.tree.leaves()) prob.A(N, wcol[l]) = 1.0;
  prob.sense[N] = lp::Sense::Le;
  prob.b(N) = 1.0;
  prob.c = Eigen::VectorXd::Zero(nvar);
  for (int l : s.tree.leaves()) prob.c(wcol[l]) = -1.0;
  prob.free_col.assign(nvar, 0);
  if (mode == Mode::Unconstrained)
    for (int n = 0; n < N; ++n)
      if (theta0[n] >= 0)
        for (int i = 0; i < d; ++i) prob.free_col[theta0[n] + i] = 1;

  lp::Solution sol = lp::solve(prob);
  if (sol.status == lp::Status::Optimal && -sol.objective > 1e-8) {
    out.verdict = ArbitrageResult::Verdict::Arbitrage;
    out.holdings.assign(N, Eigen::VectorXd::Zero(d));
    out.payoff.assign(N, 0.0);
    for (int n = 0; n < N; ++n)
      if (theta0[n] >= 0) out.holdings[n] = sol.x.segment(theta0[n], d);
    for (int l : s.tree.leaves()) out.payoff[l] = sol.x(wcol[l]);
    return out;
  }
  out.verdict = ArbitrageResult::Verdict::Boundary;
  return out;
}

std::optional<PriceSystem> find_scps(const MarketScenario& s) {
  const int N = s.tree.size(), d = s.d;
  auto col = [d](int n, int i) { return n * d + i; };

  // Feasibility of a supermartingale system with relative polar margin delta
  // on every pair quoting a genuine spread; frictionless pairs are pinned to
  // their single price (the relative-interior notion of strictness).
  auto attempt = [&](double delta) -> std::optional<std::vector<Eigen::VectorXd>> {
    lp::Problem prob;
    std::vector<Eigen::VectorXd> rows;
    std::vector<lp::Sense> senses;
    std::vector<double> rhs;
    auto blank = [&] { return Eigen::VectorXd::Zero(N * d); };
    {
      Eigen::VectorXd row = blank();
      row(col(0, 0)) = 1.0;
      rows.push_back(row);
      senses.push_back(lp::Sense::Eq);
      rhs.push_back(1.0);
    }
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          if (s.bid_ask[n].frictionless_pair(i, j)) {
            Eigen::VectorXd row = blank();
            row(col(n, i)) = s.bid_ask[n].pi(i, j);
            row(col(n, j)) = -1.0;
            rows.push_back(row);
            senses.push_back(lp::Sense::Eq);
            rhs.push_back(0.0);
          } else {
            for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
              Eigen::VectorXd row = blank();
              row(col(n, a)) = s.bid_ask[n].pi(a, b) - delta;
              row(col(n, b)) = -1.0;
              rows.push_back(row);
              senses.push_back(lp::Sense::Ge);
              rhs.push_back(0.0);
            }
          }
        }
    for (int n = 0; n < N; ++n) {
      if (s.tree.is_leaf(n)) continue;
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd row = blank();
        row(col(n, i)) = 1.0;
        for (int c : s.tree.nodes[n].children) row(col(c, i)) = -s.tree.nodes[c].cond_prob;
        rows.push_back(row);
        senses.push_back(lp::Sense::Ge);
        rhs.push_back(0.0);
      }
    }
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd row = blank();
        row(col(n, i)) = 1.0;
        rows.push_back(row);
        senses.push_back(lp::Sense::Ge);
        rhs.push_back(delta);
      }

    prob.A = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), N * d);
    prob.b = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      prob.A.row(static_cast<int>(r)) = rows[r].transpose();
      prob.b(static_cast<int>(r)) = rhs[r];
    }
    prob.sense = senses;
    prob.c = Eigen::VectorXd::Zero(N * d);
    prob.free_col.assign(N * d, 0);
    lp::Solution sol = lp::solve(prob);
    if (sol.status != lp::Status::Optimal) return std::nullopt;
    std::vector<Eigen::VectorXd> z(N);
    for (int n = 0; n < N; ++n) z[n] = sol.x.segment(col(n, 0), d);
    return z;
  };

  const double ladder[] = {0.5,  0.2,  0.1,  0.05, 0.02, 0.01, 3e-3,
                           1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  double lo = 0.0, hi = 1.0;  // lo: best feasible, hi: smallest known infeasible
  std::optional<std::vector<Eigen::VectorXd>> best;
  for (double delta : ladder) {
    if (auto z = attempt(delta)) {
      lo = delta;
      best = std::move(z);
      break;
    }
    hi = delta;
  }
  if (!best) return std::nullopt;
  for (int it = 0; it < 10; ++it) {
    double mid = 0.5 * (lo + hi);
    if (auto z = attempt(mid)) {
      lo = mid;
      best = std::move(z);
    } else {
      hi = mid;
    }
  }

  PriceSystem ps;
  ps.kind = SystemKind::Supermartingale;
  ps.delta_star = lo;
  ps.z = std::move(*best);
  ps.strict_margin = strictness_margin(s, ps.z);
  return ps;
}

DeflationReport check_supermartingale_deflation(const MarketScenario& s, const PriceSystem& z,
                                                const Strategy& v) {
  require_system_shape(s, z);
  if (static_cast<int>(v.holdings.size()) != s.tree.size())
    fail("ParameterError", "strategy does not cover every node");
  DeflationReport rep;
  for (int n = 0; n < s.tree.size(); ++n) {
    if (s.tree.is_leaf(n)) continue;
    double val = z.z[n].dot(v.holdings[n]);
    double m = 0.0;
    for (int c : s.tree.nodes[n].children)
      m += s.tree.nodes[c].cond_prob * z.z[c].dot(v.holdings[c]);
    double diff = m - val;  // positive = deflated value drifts upward
    rep.max_violation = std::max(rep.max_violation, diff);
    rep.max_equality_residual =
        std::max(rep.max_equality_residual, std::abs(diff) / (1.0 + std::abs(val)));
    if (diff > 1e-9)
      rep.violations.push_back({n, "deflated value gains in expectation", diff});
  }
  return rep;
}

}  // namespace tcmarket
