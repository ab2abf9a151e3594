#include "tcmarket/scenario.hpp"

#include <cmath>

#include "tcmarket/jsonio.hpp"

namespace tcmarket {

std::string to_string(Mode m) { return m == Mode::NoShort ? "no_short" : "unconstrained"; }

Mode mode_from_string(const std::string& s) {
  if (s == "no_short") return Mode::NoShort;
  if (s == "unconstrained") return Mode::Unconstrained;
  fail("ParseError", "unknown mode '" + s + "'");
}

void validate_scenario(const MarketScenario& s, bool check_endowment) {
  const int n = s.tree.size();
  if (static_cast<int>(s.bid_ask.size()) != n)
    fail("ValidationError", "bid-ask map does not cover every node");
  if (s.d < 1) fail("ValidationError", "dimension must be at least 1");
  for (int i = 0; i < n; ++i) {
    if (s.bid_ask[i].d != s.d)
      fail("ValidationError", "matrix dimension mismatch (node " + std::to_string(i) + ")");
    try {
      validate_bid_ask(s.bid_ask[i].pi);
    } catch (const Error& e) {
      fail("ValidationError", std::string("invalid bid-ask matrix (node ") + std::to_string(i) +
                                  "): " + e.what());
    }
  }
  if (s.endowment.size() != s.d) fail("ValidationError", "endowment dimension mismatch");
  if (check_endowment) {
    if (s.mode == Mode::NoShort) {
      for (int i = 0; i < s.d; ++i)
        if (!(s.endowment(i) >= 0.0))
          fail("ValidationError", "no_short endowment must be componentwise nonnegative");
      if (s.endowment.isZero())
        fail("ValidationError", "no_short endowment must be nonzero");
    } else {
      if (!(liquidation_value(s.bid_ask[0], s.endowment) > 0.0))
        fail("ValidationError",
             "unconstrained endowment must have strictly positive liquidation value at the root");
    }
  }
  if (s.has_prices()) {
    if (static_cast<int>(s.node_prices.size()) != n)
      fail("ValidationError", "price map does not cover every node");
    for (int i = 0; i < n; ++i) {
      if (s.node_prices[i].size() != s.d)
        fail("ValidationError", "price dimension mismatch (node " + std::to_string(i) + ")");
      for (int j = 0; j < s.d; ++j)
        if (!(s.node_prices[i](j) > 0.0))
          fail("ValidationError", "prices must be positive (node " + std::to_string(i) + ")");
    }
  }
}

std::string save_scenario(const MarketScenario& s) {
  Json out;
  out["version"] = 1;
  out["d"] = s.d;
  out["mode"] = to_string(s.mode);
  Json u;
  u["kind"] = s.utility.kind == Utility::Kind::Log ? "log" : "power";
  if (s.utility.kind == Utility::Kind::Power) u["p"] = format_real(s.utility.p);
  out["utility"] = std::move(u);
  Json endow = Json::array();
  for (int i = 0; i < s.d; ++i) endow.push_back(format_real(s.endowment(i)));
  out["endowment"] = std::move(endow);

  Json nodes = Json::array();
  for (const auto& node : s.tree.nodes) {
    Json jn;
    jn["id"] = node.id;
    jn["time"] = node.time;
    if (node.parent >= 0) jn["parent"] = node.parent;
    jn["prob"] = format_real(node.cond_prob);
    Json pi = Json::array();
    for (int i = 0; i < s.d; ++i) {
      Json row = Json::array();
      for (int j = 0; j < s.d; ++j) row.push_back(format_real(s.bid_ask[node.id].pi(i, j)));
      pi.push_back(std::move(row));
    }
    jn["pi"] = std::move(pi);
    if (s.has_prices()) {
      Json pr = Json::array();
      for (int i = 0; i < s.d; ++i) pr.push_back(format_real(s.node_prices[node.id](i)));
      jn["price"] = std::move(pr);
    }
    nodes.push_back(std::move(jn));
  }
  out["nodes"] = std::move(nodes);
  return out.dump(2) + "\n";
}

MarketScenario load_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("ParseError", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("ParseError", "top level must be an object");
  if (require_field(j, "version") != 1) fail("ParseError", "unsupported version");

  MarketScenario s;
  if (!require_field(j, "d").is_number_integer()) fail("ParseError", "d must be an integer");
  s.d = require_field(j, "d").get<int>();
  if (s.d < 1) fail("ParseError", "d must be at least 1");
  s.mode = mode_from_string(require_field(j, "mode").get<std::string>());

  const Json& ju = require_field(j, "utility");
  std::string kind = require_field(ju, "kind").get<std::string>();
  if (kind == "log") {
    s.utility = Utility::log();
  } else if (kind == "power") {
    s.utility = Utility::power(parse_real(require_field(ju, "p"), "utility.p"));
  } else {
    fail("ParseError", "unknown utility kind '" + kind + "'");
  }

  const Json& je = require_field(j, "endowment");
  if (!je.is_array() || static_cast<int>(je.size()) != s.d)
    fail("ParseError", "endowment must be an array of d reals");
  s.endowment.resize(s.d);
  for (int i = 0; i < s.d; ++i) s.endowment(i) = parse_real(je[i], "endowment");

  const Json& jn = require_field(j, "nodes");
  if (!jn.is_array() || jn.empty()) fail("ParseError", "nodes must be a nonempty array");
  std::vector<EventTree::Node> nodes;
  bool any_price = false;
  std::vector<Eigen::VectorXd> prices;
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& item : jn) {
    EventTree::Node node;
    node.id = require_field(item, "id").get<int>();
    node.time = require_field(item, "time").get<int>();
    node.parent = item.contains("parent") ? item["parent"].get<int>() : -1;
    node.cond_prob = parse_real(require_field(item, "prob"), "prob");
    const Json& jpi = require_field(item, "pi");
    if (!jpi.is_array() || static_cast<int>(jpi.size()) != s.d)
      fail("ParseError", "pi must be a d x d array (node " + std::to_string(node.id) + ")");
    Eigen::MatrixXd pi(s.d, s.d);
    for (int r = 0; r < s.d; ++r) {
      if (!jpi[r].is_array() || static_cast<int>(jpi[r].size()) != s.d)
        fail("ParseError", "pi row length mismatch (node " + std::to_string(node.id) + ")");
      for (int c = 0; c < s.d; ++c) pi(r, c) = parse_real(jpi[r][c], "pi");
    }
    mats.push_back(std::move(pi));
    if (item.contains("price")) {
      any_price = true;
      Eigen::VectorXd pr(s.d);
      const Json& jp = item["price"];
      if (!jp.is_array() || static_cast<int>(jp.size()) != s.d)
        fail("ParseError", "price must be an array of d reals (node " + std::to_string(node.id) + ")");
      for (int i = 0; i < s.d; ++i) pr(i) = parse_real(jp[i], "price");
      prices.push_back(std::move(pr));
    } else {
      prices.emplace_back();
    }
    nodes.push_back(std::move(node));
  }

  s.tree = EventTree::build(std::move(nodes));
  s.bid_ask.reserve(mats.size());
  for (auto& m : mats) s.bid_ask.push_back(BidAskMatrix{s.d, std::move(m)});
  if (any_price) {
    for (size_t i = 0; i < prices.size(); ++i)
      if (prices[i].size() == 0)
        fail("ParseError", "price map must cover every node or none (node " + std::to_string(i) + ")");
    s.node_prices = std::move(prices);
  }
  validate_scenario(s);
  return s;
}

TradeReport check_self_financing(const MarketScenario& s, const Strategy& v, double tol) {
  TradeReport report;
  const int n = s.tree.size();
  if (static_cast<int>(v.holdings.size()) != n)
    fail("ParameterError", "strategy holdings must cover every node");
  report.witnesses.resize(n);

  for (int id = 0; id < n; ++id) {
    const auto& node = s.tree.nodes[id];
    const Eigen::VectorXd& prev = node.parent < 0 ? s.endowment : v.holdings[node.parent];
    Eigen::VectorXd incr = v.holdings[id] - prev;
    ConeWitness w = cone_witness(s.bid_ask[id], -incr, tol);
    report.max_residual = std::max(report.max_residual, w.residual);
    if (!w.contained) {
      report.self_financing = false;
      report.violations.push_back({id, "increment not in -K", w.residual});
    } else {
      report.witnesses[id] = w.decomposition;
    }
    if (s.mode == Mode::NoShort) {
      for (int i = 0; i < s.d; ++i)
        if (v.holdings[id](i) < -tol) {
          report.admissible = false;
          report.violations.push_back({id, "negative holdings under no_short", -v.holdings[id](i)});
          break;
        }
    }
    if (s.tree.is_leaf(id)) {
      double f = id < static_cast<int>(v.payoff.size()) ? v.payoff[id]
                                                        : std::numeric_limits<double>::quiet_NaN();
      if (!(f > 0.0)) {
        report.admissible = false;
        report.violations.push_back({id, "terminal payoff not strictly positive", f});
      } else {
        double liq = liquidation_value(s.bid_ask[id], v.holdings[id]);
        if (liq < f - tol) {
          report.admissible = false;
          report.violations.push_back({id, "claimed payoff exceeds liquidation value", f - liq});
        }
      }
    }
  }
  return report;
}

}  // namespace tcmarket
