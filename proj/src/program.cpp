#include "tcmarket/program.hpp"

namespace tcmarket {

TreeProgram build_tree_program(const MarketScenario& s) {
  TreeProgram tp;
  const int n = s.tree.size();
  const int d = s.d;
  tp.d = d;
  tp.trade0.resize(n);
  tp.disp0.resize(n);
  tp.hold0.assign(n, -1);
  tp.payoff_col.assign(n, -1);
  tp.row0.resize(n);

  int col = 0, row = 0;
  for (int id = 0; id < n; ++id) {
    tp.trade0[id] = col;
    col += d * (d - 1);
    tp.disp0[id] = col;
    col += d;
    if (s.tree.is_leaf(id)) {
      tp.payoff_col[id] = col;
      col += 1;
    } else {
      tp.hold0[id] = col;
      col += d;
    }
    tp.row0[id] = row;
    row += d;
  }
  tp.nvar = col;
  tp.nrow = row;

  tp.nonneg.assign(tp.nvar, 1);
  if (s.mode == Mode::Unconstrained)
    for (int id = 0; id < n; ++id)
      if (!s.tree.is_leaf(id))
        for (int i = 0; i < d; ++i) tp.nonneg[tp.hold0[id] + i] = 0;

  std::vector<Eigen::Triplet<double>> trips;
  tp.b = Eigen::VectorXd::Zero(tp.nrow);
  for (int id = 0; id < n; ++id) {
    const auto& node = s.tree.nodes[id];
    const auto& pi = s.bid_ask[id].pi;
    int r = tp.row0[id];
    // Post-trade position of this node...
    if (s.tree.is_leaf(id)) {
      trips.emplace_back(r + 0, tp.payoff_col[id], 1.0);
    } else {
      for (int i = 0; i < d; ++i) trips.emplace_back(r + i, tp.hold0[id] + i, 1.0);
    }
    // ...minus the pre-trade position...
    if (node.parent < 0) {
      for (int i = 0; i < d; ++i) tp.b(r + i) = s.endowment(i);
    } else {
      for (int i = 0; i < d; ++i) trips.emplace_back(r + i, tp.hold0[node.parent] + i, -1.0);
    }
    // ...must equal the net trade: buys(i,j) adds one unit of j and costs
    // pi(i,j) units of i; disposals shed holdings.
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        int c = tp.buy_col(id, i, j);
        trips.emplace_back(r + j, c, -1.0);
        trips.emplace_back(r + i, c, pi(i, j));
      }
    for (int i = 0; i < d; ++i) trips.emplace_back(r + i, tp.disp0[id] + i, 1.0);
  }
  tp.A.resize(tp.nrow, tp.nvar);
  tp.A.setFromTriplets(trips.begin(), trips.end());

  for (int leaf : s.tree.leaves())
    tp.utilities.push_back({tp.payoff_col[leaf], s.tree.nodes[leaf].prob, s.utility});
  return tp;
}

Strategy TreeProgram::unpack(const MarketScenario& s, const Eigen::VectorXd& x) const {
  const int n = s.tree.size();
  Strategy v;
  v.holdings.resize(n);
  v.payoff.assign(n, 0.0);
  v.trades.resize(n);
  for (int id = 0; id < n; ++id) {
    if (s.tree.is_leaf(id)) {
      double f = x(payoff_col[id]);
      v.payoff[id] = f;
      v.holdings[id] = Eigen::VectorXd::Zero(d);
      v.holdings[id](0) = f;
    } else {
      v.holdings[id] = x.segment(hold0[id], d);
    }
    TradeVector t = TradeVector::zero(d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j)
        if (i != j) t.buys(i, j) = x(buy_col(id, i, j));
      t.disposals(i) = x(disp0[id] + i);
    }
    v.trades[id] = std::move(t);
  }
  return v;
}

MarketScenario subscenario(const MarketScenario& s, int node, const Eigen::VectorXd& endowment) {
  std::vector<int> ids = s.tree.subtree(node);
  std::vector<int> remap(s.tree.size(), -1);
  for (size_t i = 0; i < ids.size(); ++i) remap[ids[i]] = static_cast<int>(i);

  MarketScenario sub;
  sub.d = s.d;
  sub.mode = s.mode;
  sub.utility = s.utility;
  sub.endowment = endowment;
  std::vector<EventTree::Node> nodes;
  int t0 = s.tree.nodes[node].time;
  for (int old : ids) {
    const auto& src = s.tree.nodes[old];
    EventTree::Node nn;
    nn.id = remap[old];
    nn.time = src.time - t0;
    nn.parent = old == node ? -1 : remap[src.parent];
    nn.cond_prob = old == node ? 1.0 : src.cond_prob;
    nodes.push_back(nn);
    sub.bid_ask.push_back(s.bid_ask[old]);
    if (s.has_prices()) sub.node_prices.push_back(s.node_prices[old]);
  }
  sub.tree = EventTree::build(std::move(nodes));
  validate_scenario(sub, /*check_endowment=*/false);
  return sub;
}

}  // namespace tcmarket
