#include "tcmarket/report.hpp"

#include <sstream>

#include "tcmarket/errors.hpp"

namespace tcmarket::report {
namespace {

Json violations(const std::vector<Violation>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) {
    Json item;
    item["node"] = v.node;
    item["what"] = v.what;
    item["residual"] = real(v.residual);
    arr.push_back(std::move(item));
  }
  return arr;
}

bool scalar_array(const Json& j) {
  for (const auto& e : j)
    if (e.is_structured()) return false;
  return true;
}

void text_walk(const Json& j, std::ostringstream& os, int depth) {
  std::string pad(2 * static_cast<size_t>(depth), ' ');
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object() || (value.is_array() && !(value.empty() || scalar_array(value)))) {
        os << pad << key << ":\n";
        text_walk(value, os, depth + 1);
      } else if (value.is_array()) {
        os << pad << key << ": ";
        text_walk(value, os, 0);
        os << "\n";
      } else {
        os << pad << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
           << "\n";
      }
    }
  } else if (j.is_array()) {
    if (j.empty() || scalar_array(j)) {
      os << "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << ", ";
        first = false;
        os << (e.is_string() ? e.get<std::string>() : e.dump());
      }
      os << "]";
    } else {
      for (const auto& e : j) {
        os << pad << "-\n";
        text_walk(e, os, depth + 1);
      }
    }
  } else {
    os << pad << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

}  // namespace

Format format_from_string(const std::string& s) {
  if (s == "text") return Format::Text;
  if (s == "structured") return Format::Structured;
  fail("ParseError", "unknown report format '" + s + "'");
}

Json real(double x) { return Json(format_real(x)); }

Json vec(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(format_real(v(i)));
  return arr;
}

Json solve_report(const MarketScenario& s, const SolveReport& r) {
  Json j;
  j["value"] = real(r.value);
  j["gap"] = real(r.gap);
  j["tol_gap"] = real(r.tol_gap);
  j["superdifferential"] = vec(r.superdifferential);
  Json nodes = Json::array();
  for (int n = 0; n < s.tree.size(); ++n) {
    Json item;
    item["id"] = n;
    item["holdings"] = vec(r.strategy.holdings[n]);
    if (s.tree.is_leaf(n)) item["payoff"] = real(r.strategy.payoff[n]);
    if (!r.strategy.trades.empty()) {
      double volume = r.strategy.trades[n].total_volume();
      if (volume > 0.0) item["trade_volume"] = real(volume);
    }
    item["dual"] = vec(r.node_duals[n]);
    nodes.push_back(std::move(item));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

Json price_system(const PriceSystem& z) {
  Json j;
  j["kind"] = to_string(z.kind);
  j["strict_margin"] = real(z.strict_margin);
  j["delta_star"] = real(z.delta_star);
  Json nodes = Json::array();
  for (size_t n = 0; n < z.z.size(); ++n) {
    Json item;
    item["id"] = static_cast<int>(n);
    item["z"] = vec(z.z[n]);
    item["price"] = vec(z.z[n] / z.z[n](0));
    nodes.push_back(std::move(item));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

Json verification(const VerificationReport& rep) {
  Json j;
  j["valid"] = rep.valid;
  j["interior_empty"] = rep.interior_empty;
  j["strict_margin"] = real(rep.strict_margin);
  j["max_polar_violation"] = real(rep.max_polar_violation);
  j["max_martingale_violation"] = real(rep.max_martingale_violation);
  j["violations"] = violations(rep.violations);
  return j;
}

Json certificate(const ShadowCertificate& c) {
  Json j;
  j["passed"] = c.passed;
  j["attainable"] = c.attainable;
  j["attainable_residual"] = real(c.attainable_residual);
  j["terminal_marginal_residual"] = real(c.terminal_marginal_residual);
  j["terminal_price_residual"] = real(c.terminal_price_residual);
  j["budget_residual"] = real(c.budget_residual);
  return j;
}

Json pin_set(const PinSet& pins) {
  Json arr = Json::array();
  for (const Pin& p : pins) {
    Json item;
    item["node"] = p.node;
    item["i"] = p.i + 1;  // 1-based asset labels in reports
    item["j"] = p.j + 1;
    arr.push_back(std::move(item));
  }
  Json j;
  j["count"] = static_cast<int>(pins.size());
  j["pins"] = std::move(arr);
  return j;
}

Json infeasibility(const InfeasibilityCertificate& cert) {
  Json j;
  j["feasible"] = false;
  j["lp_infeasible"] = cert.lp_infeasible;
  j["delta_star"] = real(cert.delta_star);
  j["detail"] = cert.detail;
  Json arr = Json::array();
  for (const auto& [label, weight] : cert.farkas) {
    Json item;
    item["constraint"] = label;
    item["weight"] = real(weight);
    arr.push_back(std::move(item));
  }
  j["farkas"] = std::move(arr);
  return j;
}

Json arbitrage(const ArbitrageResult& res) {
  Json j;
  switch (res.verdict) {
    case ArbitrageResult::Verdict::NoArbitrage: j["verdict"] = "no_arbitrage"; break;
    case ArbitrageResult::Verdict::Arbitrage: j["verdict"] = "arbitrage"; break;
    case ArbitrageResult::Verdict::Boundary: j["verdict"] = "boundary"; break;
  }
  if (res.verdict == ArbitrageResult::Verdict::NoArbitrage) {
    j["density_floor"] = real(res.density_floor);
    Json arr = Json::array();
    for (double q : res.density) arr.push_back(format_real(q));
    j["density"] = std::move(arr);
  }
  if (res.verdict == ArbitrageResult::Verdict::Arbitrage) {
    Json nodes = Json::array();
    for (size_t n = 0; n < res.holdings.size(); ++n) {
      if (res.holdings[n].size() == 0 || res.holdings[n].isZero(0.0)) continue;
      Json item;
      item["id"] = static_cast<int>(n);
      item["holdings"] = vec(res.holdings[n]);
      nodes.push_back(std::move(item));
    }
    j["holdings"] = std::move(nodes);
    Json pay = Json::array();
    for (size_t n = 0; n < res.payoff.size(); ++n) {
      if (res.payoff[n] == 0.0) continue;
      Json item;
      item["id"] = static_cast<int>(n);
      item["wealth"] = real(res.payoff[n]);
      pay.push_back(std::move(item));
    }
    j["terminal_wealth"] = std::move(pay);
  }
  return j;
}

Json deflation(const DeflationReport& rep) {
  Json j;
  j["max_violation"] = real(rep.max_violation);
  j["max_equality_residual"] = real(rep.max_equality_residual);
  j["violations"] = violations(rep.violations);
  return j;
}

std::string render(const Json& doc, Format format) {
  if (format == Format::Structured) return doc.dump(2) + "\n";
  std::ostringstream os;
  text_walk(doc, os, 0);
  return os.str();
}

}  // namespace tcmarket::report
