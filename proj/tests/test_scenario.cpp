#include <doctest.h>

#include <cmath>
#include <string>

#include "tcmarket/jsonio.hpp"
#include "tcmarket/scenario.hpp"

using namespace tcmarket;

namespace {

MarketScenario small_case() {
  return build_counterexample(4, 2, Eigen::Vector2d(4.0, 0.0), Mode::NoShort);
}

void expect_code(const std::string& text, const std::string& code) {
  try {
    load_scenario(text);
    FAIL("expected load to reject: ", code);
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("two-asset example has the documented tree shape") {
  MarketScenario s = small_case();
  const int kmax = 2;
  CHECK(s.d == 2);
  CHECK(s.tree.size() == 1 + (kmax + 1) + 2 * (kmax + 1));
  CHECK(s.tree.horizon == 2);
  CHECK(s.tree.nodes[0].children == std::vector<int>{1, 2, 3});
  for (int k = 0; k <= kmax; ++k) {
    int branch = 1 + k;
    CHECK(s.tree.nodes[branch].children.size() == 2);
    // Middle period: bid stays 2 while the ask widens with k.
    CHECK(s.bid_ask[branch].ask(0, 1) == doctest::Approx(2.0 + k));
    CHECK(s.bid_ask[branch].bid(0, 1) == doctest::Approx(2.0));
    int bad = s.tree.nodes[branch].children[0];
    int good = s.tree.nodes[branch].children[1];
    CHECK(s.bid_ask[bad].ask(0, 1) == doctest::Approx(3.0 + k));
    CHECK(s.bid_ask[bad].bid(0, 1) == doctest::Approx(1.0));
    CHECK(s.bid_ask[good].frictionless_pair(0, 1));
    CHECK(s.bid_ask[good].ask(0, 1) == doctest::Approx(1.0));
  }
  // The root quotes a single price of 3, and the zero-cost middle branch a
  // single price of 2.
  CHECK(s.bid_ask[0].frictionless_pair(0, 1));
  CHECK(s.bid_ask[0].ask(0, 1) == doctest::Approx(3.0));
  CHECK(s.bid_ask[1].frictionless_pair(0, 1));
}

TEST_CASE("branch probabilities are exact dyadics") {
  const int n = 4, kmax = 2;
  MarketScenario s = small_case();
  CHECK(s.tree.nodes[1].cond_prob == 1.0 - std::ldexp(1.0, -n));
  CHECK(s.tree.nodes[2].cond_prob == std::ldexp(1.0, -(n + 1)));
  // Residual branch absorbs the tail mass so everything sums to one exactly.
  CHECK(s.tree.nodes[3].cond_prob == std::ldexp(1.0, -(n + kmax - 1)));
  CHECK(s.tree.nodes[1].cond_prob + s.tree.nodes[2].cond_prob + s.tree.nodes[3].cond_prob == 1.0);
  for (int k = 0; k <= kmax; ++k) {
    int bad = s.tree.nodes[1 + k].children[0];
    CHECK(s.tree.nodes[bad].cond_prob == std::ldexp(1.0, -(n + k)));
  }

  MarketScenario two = build_counterexample(6, 1, Eigen::Vector2d(4.0, 0.0), Mode::NoShort);
  CHECK(two.tree.nodes[1].cond_prob == 1.0 - std::ldexp(1.0, -6));
  CHECK(two.tree.nodes[2].cond_prob == std::ldexp(1.0, -6));
}

TEST_CASE("example builder validates its parameters") {
  CHECK_THROWS_AS(build_counterexample(0, 2, Eigen::Vector2d(4, 0), Mode::NoShort), Error);
  CHECK_THROWS_AS(build_counterexample(4, 0, Eigen::Vector2d(4, 0), Mode::NoShort), Error);
  CHECK_THROWS_AS(build_counterexample(400, 200, Eigen::Vector2d(4, 0), Mode::NoShort), Error);
}

TEST_CASE("endowment admissibility depends on the trading mode") {
  // Short positions are rejected outright under no_short.
  CHECK_THROWS_AS(build_counterexample(4, 2, Eigen::Vector2d(4, -1), Mode::NoShort), Error);
  // Unconstrained only requires solvency: covering the short unit costs 3.
  CHECK_NOTHROW(build_counterexample(4, 2, Eigen::Vector2d(4, -1), Mode::Unconstrained));
  CHECK_THROWS_AS(build_counterexample(4, 2, Eigen::Vector2d(1, -1), Mode::Unconstrained), Error);
  CHECK_THROWS_AS(build_counterexample(4, 2, Eigen::Vector2d(0, 0), Mode::NoShort), Error);
}

TEST_CASE("save and load round-trip byte-exactly") {
  MarketScenario s = build_counterexample(4, 2, Eigen::Vector2d(4.0, 0.125), Mode::NoShort,
                                          Utility::power(0.5));
  std::string a = save_scenario(s);
  MarketScenario r = load_scenario(a);
  std::string b = save_scenario(r);
  CHECK(a == b);
  CHECK(r.d == s.d);
  CHECK(r.mode == s.mode);
  CHECK(r.utility.kind == Utility::Kind::Power);
  CHECK(r.utility.p == 0.5);
  CHECK(r.endowment == s.endowment);
  CHECK(r.tree.size() == s.tree.size());
  for (int i = 0; i < s.tree.size(); ++i) {
    CHECK(r.tree.nodes[i].cond_prob == s.tree.nodes[i].cond_prob);
    CHECK(r.bid_ask[i].pi == s.bid_ask[i].pi);
  }
}

TEST_CASE("price maps survive the round-trip") {
  MarketScenario s = small_case();
  s.node_prices.assign(s.tree.size(), Eigen::VectorXd::Constant(2, 1.0));
  for (int i = 0; i < s.tree.size(); ++i) s.node_prices[i](1) = 1.0 + 0.125 * i;
  std::string a = save_scenario(s);
  MarketScenario r = load_scenario(a);
  REQUIRE(r.has_prices());
  CHECK(r.node_prices[3] == s.node_prices[3]);
  CHECK(save_scenario(r) == a);
}

TEST_CASE("loader rejects malformed documents with the right error codes") {
  expect_code("not json", "ParseError");
  expect_code("[1, 2]", "ParseError");
  expect_code("{}", "ParseError");

  Json base = Json::parse(save_scenario(small_case()));
  auto mutate = [&](auto&& f, const std::string& code) {
    Json j = base;
    f(j);
    expect_code(j.dump(), code);
  };

  mutate([](Json& j) { j["version"] = 2; }, "ParseError");
  mutate([](Json& j) { j.erase("mode"); }, "ParseError");
  mutate([](Json& j) { j["mode"] = "margin"; }, "ParseError");
  mutate([](Json& j) { j["utility"]["kind"] = "exp"; }, "ParseError");
  mutate([](Json& j) { j["endowment"] = {"1.0"}; }, "ParseError");
  mutate([](Json& j) { j["endowment"][0] = "abc"; }, "ParseError");
  mutate([](Json& j) { j["nodes"][0]["pi"] = {{"1.0"}}; }, "ParseError");
  mutate([](Json& j) { j["nodes"][2].erase("prob"); }, "ParseError");
  // A price on one node but not the others is a coverage error.
  mutate([](Json& j) { j["nodes"][0]["price"] = {"1.0", "3.0"}; }, "ParseError");

  // Structurally parseable but semantically invalid documents.
  mutate([](Json& j) { j["nodes"][0]["pi"][0][1] = "-3.0"; }, "ValidationError");
  mutate([](Json& j) { j["nodes"][1]["prob"] = "0.5"; }, "ValidationError");
  mutate([](Json& j) { j["endowment"][0] = "-4.0"; }, "ValidationError");
}

TEST_CASE("holding the endowment and liquidating is self-financing") {
  MarketScenario s = small_case();
  Strategy v;
  v.holdings.assign(s.tree.size(), s.endowment);
  v.payoff.assign(s.tree.size(), 0.0);
  for (int leaf : s.tree.leaves())
    v.payoff[leaf] = liquidation_value(s.bid_ask[leaf], v.holdings[leaf]);
  TradeReport r = check_self_financing(s, v);
  CHECK(r.ok());
  CHECK(r.violations.empty());
  CHECK(r.max_residual <= 1e-9);
  // Every witness decomposition is trivial for a no-trade plan.
  for (const auto& w : r.witnesses) CHECK(w.total_volume() <= 1e-9);
}

TEST_CASE("buying at the root and unwinding is self-financing") {
  MarketScenario s = small_case();
  Strategy v;
  v.holdings.assign(s.tree.size(), Eigen::VectorXd(2));
  // Spend 3 units of cash on one share at the root's single price of 3.
  Eigen::VectorXd pos(2);
  pos << 1.0, 1.0;
  for (int id = 0; id < s.tree.size(); ++id) v.holdings[id] = pos;
  v.payoff.assign(s.tree.size(), 0.0);
  for (int leaf : s.tree.leaves())
    v.payoff[leaf] = liquidation_value(s.bid_ask[leaf], v.holdings[leaf]);
  TradeReport r = check_self_financing(s, v);
  CHECK(r.ok());
  // The root witness records the purchase of one share.
  CHECK(r.witnesses[0].buys(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("violations are reported, not thrown") {
  MarketScenario s = small_case();
  Strategy v;
  v.holdings.assign(s.tree.size(), s.endowment);
  // Wealth appearing from nowhere at node 1: not self-financing.
  v.holdings[1] = Eigen::Vector2d(5.0, 0.0);
  // Short position at node 2 violates no_short admissibility.
  v.holdings[2] = Eigen::Vector2d(6.0, -1.0);
  v.payoff.assign(s.tree.size(), 0.0);
  for (int leaf : s.tree.leaves())
    v.payoff[leaf] = liquidation_value(s.bid_ask[leaf], v.holdings[leaf]);
  // Overstate one leaf payoff.
  int leaf = s.tree.leaves()[0];
  v.payoff[leaf] += 1.0;

  TradeReport r = check_self_financing(s, v);
  CHECK(!r.self_financing);
  CHECK(!r.admissible);
  bool saw_increment = false, saw_short = false, saw_payoff = false;
  for (const auto& viol : r.violations) {
    if (viol.node == 1 && viol.what.find("increment") != std::string::npos) saw_increment = true;
    if (viol.node == 2 && viol.what.find("no_short") != std::string::npos) saw_short = true;
    if (viol.node == leaf && viol.what.find("payoff") != std::string::npos) saw_payoff = true;
  }
  CHECK(saw_increment);
  CHECK(saw_short);
  CHECK(saw_payoff);

  // Missing payoff entries at a leaf are admissibility violations as well.
  Strategy w;
  w.holdings.assign(s.tree.size(), s.endowment);
  TradeReport rw = check_self_financing(s, w);
  CHECK(!rw.admissible);
}

TEST_CASE("disposal-only moves are self-financing but must stay solvent") {
  MarketScenario s = small_case();
  Strategy v;
  v.holdings.assign(s.tree.size(), s.endowment);
  v.holdings[1] = Eigen::Vector2d(3.5, 0.0);  // throw away half a unit of cash
  v.payoff.assign(s.tree.size(), 0.0);
  for (int leaf : s.tree.leaves()) {
    const Eigen::VectorXd& h = s.tree.nodes[leaf].parent == 1 ? v.holdings[1] : s.endowment;
    v.holdings[leaf] = h;
    v.payoff[leaf] = liquidation_value(s.bid_ask[leaf], h);
  }
  TradeReport r = check_self_financing(s, v);
  CHECK(r.ok());
  // The witness reproduces the increment (any valid cone decomposition will
  // do; it need not be the literal disposal).
  Eigen::Vector2d inc = v.holdings[1] - s.endowment;
  CHECK((r.witnesses[1].net(s.bid_ask[1]) - inc).norm() <= 1e-7);
}
