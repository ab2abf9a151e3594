#include <cmath>

#include "tcmarket/scenario.hpp"

namespace tcmarket {
namespace {

Eigen::MatrixXd spread_matrix(double bid, double ask) {
  Eigen::MatrixXd pi(2, 2);
  pi << 1.0, ask, 1.0 / bid, 1.0;
  return pi;
}

}  // namespace

MarketScenario build_counterexample(int n, int kmax, const Eigen::Vector2d& x, Mode mode,
                                    const Utility& u) {
  if (n < 1 || kmax < 1)
    fail("ParameterError", "need n >= 1 and kmax >= 1");
  // Deepest leaf probability is 2^-(2(n+kmax)-1); keep it comfortably inside
  // normalized double range so every dyadic is exact.
  if (n + kmax > 500)
    fail("ParameterError", "n + kmax too large: probabilities leave (0,1) in double precision");

  std::vector<EventTree::Node> nodes;
  std::vector<Eigen::MatrixXd> mats;
  auto add = [&](int time, int parent, double prob, Eigen::MatrixXd pi) {
    EventTree::Node node;
    node.id = static_cast<int>(nodes.size());
    node.time = time;
    node.parent = parent;
    node.cond_prob = prob;
    nodes.push_back(node);
    mats.push_back(std::move(pi));
    return node.id;
  };

  add(0, -1, 1.0, spread_matrix(3.0, 3.0));

  // Time-1 branch k quotes ask 2+k against bid 2.  Branch probabilities are
  // 1 - 2^-n (k = 0) and 2^-(n+k) (k >= 1); the tail beyond kmax, summing to
  // 2^-(n+kmax-1), is lumped onto the last branch so stated probabilities of
  // the kept branches are untouched.
  std::vector<int> level1;
  for (int k = 0; k <= kmax; ++k) {
    double p;
    if (k == 0)
      p = 1.0 - std::ldexp(1.0, -n);
    else if (k < kmax)
      p = std::ldexp(1.0, -(n + k));
    else
      p = std::ldexp(1.0, -(n + kmax - 1));
    if (!(p > 0.0 && p < 1.0))
      fail("ParameterError", "branch probability leaves (0,1) for n=" + std::to_string(n));
    level1.push_back(add(1, 0, p, spread_matrix(2.0, 2.0 + k)));
  }

  // From branch k the ask jumps to 3+k with conditional probability 2^-(n+k),
  // else the market closes frictionless at 1 (bid also 1).
  for (int k = 0; k <= kmax; ++k) {
    double pbad = std::ldexp(1.0, -(n + k));
    if (!(pbad > 0.0 && pbad < 1.0))
      fail("ParameterError", "leaf probability leaves (0,1) for n=" + std::to_string(n));
    add(2, level1[k], pbad, spread_matrix(1.0, 3.0 + k));
    add(2, level1[k], 1.0 - pbad, spread_matrix(1.0, 1.0));
  }

  MarketScenario s;
  s.tree = EventTree::build(std::move(nodes));
  s.d = 2;
  s.mode = mode;
  s.utility = u;
  s.endowment = x;
  s.bid_ask.reserve(mats.size());
  for (auto& m : mats) s.bid_ask.push_back(BidAskMatrix{2, std::move(m)});
  validate_scenario(s);
  return s;
}

}  // namespace tcmarket
