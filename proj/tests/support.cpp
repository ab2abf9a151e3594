#include "support.hpp"

#include <cmath>

#include "tcmarket/bidask.hpp"

namespace tcmarket::testsupport {
namespace {

double uni(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uni_int(std::mt19937& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

MarketScenario random_scenario(std::mt19937& rng, const GenOptions& opt) {
  const int d = uni_int(rng, opt.d_min, opt.d_max);
  const int horizon = uni_int(rng, opt.horizon_min, opt.horizon_max);

  std::vector<EventTree::Node> nodes;
  std::vector<Eigen::VectorXd> price;  // reference prices, asset 1 = 1
  nodes.push_back({0, 0, -1, 1.0, 1.0, {}});
  Eigen::VectorXd p0 = Eigen::VectorXd::Ones(d);
  for (int i = 1; i < d; ++i) p0(i) = uni(rng, 0.5, 2.0);
  price.push_back(p0);

  std::vector<int> frontier = {0};
  for (int t = 1; t <= horizon; ++t) {
    std::vector<int> next;
    for (int parent : frontier) {
      int budget = opt.max_nodes - static_cast<int>(nodes.size());
      int remaining_frontier = 1;  // at least one child per remaining parent
      int kids = std::min(opt.branch_max, std::max(1, budget - remaining_frontier));
      kids = uni_int(rng, 1, kids);
      Eigen::VectorXd w(kids);
      for (int k = 0; k < kids; ++k) w(k) = uni(rng, 0.2, 1.0);
      w /= w.sum();
      // Exact unit mass: assign the last child the complement.
      for (int k = 0; k < kids; ++k) {
        double cp = k + 1 == kids ? 1.0 - (w.head(kids - 1).sum()) : w(k);
        if (kids == 1) cp = 1.0;
        int id = static_cast<int>(nodes.size());
        nodes.push_back({id, t, parent, cp, 1.0, {}});
        Eigen::VectorXd p = price[parent];
        for (int i = 1; i < d; ++i) p(i) *= std::exp(uni(rng, -0.25, 0.25));
        price.push_back(p);
        next.push_back(id);
      }
    }
    frontier = std::move(next);
  }

  MarketScenario s;
  s.tree = EventTree::build(std::move(nodes));
  s.d = d;
  s.mode = opt.mode;
  if (opt.allow_power && uni_int(rng, 0, 2) > 0) {
    s.utility = uni_int(rng, 0, 1) ? Utility::power(0.5) : Utility::power(-1.0);
  } else {
    s.utility = Utility::log();
  }
  for (int n = 0; n < s.tree.size(); ++n) {
    Eigen::MatrixXd costs = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j) costs(i, j) = uni(rng, opt.cost_min, opt.cost_max);
    s.bid_ask.push_back(from_price_and_costs(price[n], costs));
  }
  s.endowment = Eigen::VectorXd::Zero(d);
  s.endowment(0) = uni(rng, 0.5, 2.0);
  for (int i = 1; i < d; ++i) s.endowment(i) = uni(rng, 0.0, 1.5);
  validate_scenario(s);
  return s;
}

Strategy random_strategy(const MarketScenario& s, std::mt19937& rng) {
  const int d = s.d;
  Strategy v;
  v.holdings.resize(s.tree.size());
  v.payoff.assign(s.tree.size(), 0.0);
  v.trades.resize(s.tree.size());

  for (int n = 0; n < s.tree.size(); ++n) {
    const auto& node = s.tree.nodes[n];
    Eigen::VectorXd h = node.parent < 0 ? s.endowment : v.holdings[node.parent];
    TradeVector tv = TradeVector::zero(d);
    int moves = uni_int(rng, 0, 2);
    for (int m = 0; m < moves && d > 1; ++m) {
      int i = uni_int(rng, 0, d - 1);
      int j = uni_int(rng, 0, d - 2);
      if (j >= i) ++j;
      double rate = s.bid_ask[n].pi(i, j);
      double affordable = h(i) / rate;
      double amount = uni(rng, 0.0, 0.6) * affordable;
      tv.buys(i, j) += amount;
      h(i) -= amount * rate;
      h(j) += amount;
    }
    if (uni_int(rng, 0, 3) == 0) {
      int i = uni_int(rng, 0, d - 1);
      double amount = uni(rng, 0.0, 0.05) * h(i);
      tv.disposals(i) += amount;
      h(i) -= amount;
    }
    v.holdings[n] = h;
    v.trades[n] = tv;
    if (s.tree.is_leaf(n)) v.payoff[n] = liquidation_value(s.bid_ask[n], h);
  }
  return v;
}

}  // namespace tcmarket::testsupport
