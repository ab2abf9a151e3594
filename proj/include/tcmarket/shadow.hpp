#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tcmarket/solve.hpp"

namespace tcmarket {

enum class SystemKind { Martingale, Supermartingale };

std::string to_string(SystemKind k);

// Node-indexed positive price deflator z.  S^z = z / z^1 is the induced
// frictionless price process, which lies inside the bid-ask spread whenever
// z is polar-feasible at every node.
struct PriceSystem {
  std::vector<Eigen::VectorXd> z;  // per node, strictly positive
  SystemKind kind = SystemKind::Supermartingale;

  // Smallest relative polar slack min (pi^{ij} z_i - z_j) / (pi^{ij} z_i)
  // over all nodes and ordered pairs, clipped at 0 (0 = touches a boundary,
  // as it necessarily does when any node quotes a frictionless pair).
  double strict_margin = 0.0;

  // For systems produced by the margin-maximizing searches: the verified
  // margin delta of the LP (strictness measured only over pairs with a
  // genuine spread; frictionless pairs are pinned to their single price).
  double delta_star = 0.0;

  Eigen::VectorXd price(int node) const { return z[node] / z[node](0); }
};

struct Violation {
  int node = -1;
  std::string what;
  double residual = 0.0;
};

struct VerificationReport {
  bool valid = true;
  bool interior_empty = false;  // some node quotes a frictionless pair
  double strict_margin = 0.0;
  double max_polar_violation = 0.0;       // relative
  double max_martingale_violation = 0.0;  // relative, per the declared kind
  std::vector<Violation> violations;
};

// Checks positivity, polar membership (relative tolerance 1e-9: extracted
// systems sit exactly on pinned boundaries, so exact inequalities would flag
// harmless 1-ulp excursions) and the componentwise (super)martingale property
// (tolerance 1e-9) of z on s; fills strict_margin.
VerificationReport verify_price_system(const MarketScenario& s, const PriceSystem& z);

enum class CrossCheck { Full, Sampled, Off };

// Marginal-value price system extracted from a solved no_short scenario:
// z_n = node_duals[n] / P(n), with terminal values overridden by the exact
// formulas z^1_T = U'(f), z^i_T = U'(f)/pi^{i1}_T.  The duals are
// authoritative; finite differences of conditional_value with eps in
// {1e-4, 1e-5} guard them as supergradients of the concave tail value: upward
// quotients must increase as eps decreases and bound the dual from below, a
// downward quotient (taken when holdings stay feasible) bounds it from above,
// both within 1e-3 relative.  Probed on all internal nodes (Full), a
// deterministic subset (Sampled), or not at all (Off).  Throws "NotOptimal"
// when r.gap exceeds its tolerance, "CrossCheckFailure" on a violated bound.
// The output is deliberately not normalized.
PriceSystem extract_shadow(const MarketScenario& s, const SolveReport& r,
                           CrossCheck check = CrossCheck::Full);

// The four sufficient conditions for z to price the optimum of r: the
// strategy is attainable (self-financing and admissible), the terminal
// deflator matches marginal utility, terminal prices match the liquidation
// rates, and the budget identity E[z^1_T f] = z_root . x holds.
struct ShadowCertificate {
  bool passed = false;
  bool attainable = false;
  double attainable_residual = 0.0;
  double terminal_marginal_residual = 0.0;   // relative, leafwise worst
  double terminal_price_residual = 0.0;      // relative, leafwise worst
  double budget_residual = 0.0;              // relative
};

ShadowCertificate certify_shadow(const MarketScenario& s, const PriceSystem& z,
                                 const SolveReport& r, double tol = 1e-6);

// Utility maximization in the frictionless market with price process
// S^z = z/z^1 (holdings kept nonnegative in no_short mode).  node_duals
// carries the state-price deflator y_n * S^z_n of the frictionless program.
// Throws "Unbounded" when the candidate prices admit unbounded utility (a
// meaningful diagnostic: such a z cannot be a shadow price).
SolveReport frictionless_solve(const MarketScenario& s, const PriceSystem& z);

// Marginal value h of the endowment at the root, taken from the root duals.
// Checked against the closed-form lower bounds h^1 >= E[U'(f)],
// h^i >= E[U'(f)/pi^{i1}_T], polar membership at the root, and the identity
// h . x = E[U'(f) f].  Throws "NotOptimal" / "CrossCheckFailure".
Eigen::VectorXd value_superdifferential(const MarketScenario& s, const SolveReport& r);

// One pin per executed trade of an optimal strategy: buys(i,j) > tol at node
// n forces z^j = pi^{ij} z^i there (trading at the quoted rate must be
// loss-free under a shadow price).
struct Pin {
  int node = 0;
  int i = 0;
  int j = 0;
};
using PinSet = std::vector<Pin>;

PinSet pin_constraints(const MarketScenario& s, const SolveReport& r, double tol = 1e-7);

// Why no positive price system with the required pins and kind exists: either
// the LP is infeasible (farkas lists row multipliers of a certifying
// combination) or every feasible system touches zero (delta_star = 0).
struct InfeasibilityCertificate {
  bool lp_infeasible = false;
  double delta_star = 0.0;
  std::vector<std::pair<std::string, double>> farkas;  // row label -> weight
  std::string detail;
};

// Maximizes the floor delta of all z components subject to z^1_root = 1,
// polar membership, the pin equalities, and the kind (martingale equalities
// or componentwise supermartingale inequalities).  The floor is located by
// bisection over per-delta feasibility problems, so delta_star is a
// certified-feasible lower bound for the true maximum.  Returns the system
// when delta* > 0, else the certificate.
std::variant<PriceSystem, InfeasibilityCertificate> find_pinned_price_system(
    const MarketScenario& s, const PinSet& pins, SystemKind kind);

// Frictionless finite-market arbitrage test for a given price map (asset 1
// is the numeraire, price^1 = 1).  A strictly positive (super)martingale
// density certifies no-arbitrage; when none exists, an explicit zero-cost
// strategy with nonnegative, somewhere-positive terminal wealth is produced.
// Optima within 1e-10 of zero are reported as Boundary, not classified.
struct ArbitrageResult {
  enum class Verdict { NoArbitrage, Arbitrage, Boundary };
  Verdict verdict = Verdict::Boundary;
  std::vector<double> density;            // per node (NoArbitrage witness)
  double density_floor = 0.0;             // min density achieved
  std::vector<Eigen::VectorXd> holdings;  // by node id, zero at leaves (Arbitrage)
  std::vector<double> payoff;             // by node id, terminal wealth at leaves
};

ArbitrageResult detect_arbitrage(const MarketScenario& s,
                                 const std::vector<Eigen::VectorXd>& price, Mode mode);

// Searches for a strictly consistent supermartingale price system: maximizes
// the relative polar margin delta over pairs with a genuine spread
// (pi^{ij} pi^{ji} > 1; frictionless pairs are pinned to their single price,
// the relative-interior reading of strictness) together with the positivity
// floor z >= delta.  Returns a system iff a strictly positive margin is
// attained.
std::optional<PriceSystem> find_scps(const MarketScenario& s);

// Nodewise supermartingale test of the deflated holdings process z . V.
struct DeflationReport {
  double max_violation = 0.0;          // positive part of E[z.V | n] - z.V at n
  double max_equality_residual = 0.0;  // |E[z.V | n] - z.V|, relative
  std::vector<Violation> violations;   // entries above 1e-9
};

DeflationReport check_supermartingale_deflation(const MarketScenario& s, const PriceSystem& z,
                                                const Strategy& v);

}  // namespace tcmarket
