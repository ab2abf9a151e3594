#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tcmarket/report.hpp"
#include "tcmarket/scenario.hpp"
#include "tcmarket/shadow.hpp"
#include "tcmarket/solve.hpp"

namespace py = pybind11;
using namespace tcmarket;

// The module works on scenario documents (the canonical JSON text) and
// returns reports in the same structured format; python callers parse them
// with the standard json module.

namespace {

std::string structured(const Json& j) { return report::render(j, report::Format::Structured); }

MarketScenario parse(const std::string& text) { return load_scenario(text); }

}  // namespace

PYBIND11_MODULE(_tcmarket, m) {
  m.doc() = "Expected-utility maximization under proportional transaction costs on event trees";

  py::register_exception<Error>(m, "MarketError");

  m.def("validate", [](const std::string& text) {
    parse(text);
    return true;
  }, py::arg("scenario"), "Parse and validate a scenario document; raises MarketError.");

  m.def("counterexample",
        [](int n, int kmax, std::vector<double> endowment, const std::string& mode,
           const std::string& utility, double p) {
          if (endowment.size() != 2) fail("ParameterError", "endowment needs two components");
          Utility u = utility == "power" ? Utility::power(p) : Utility::log();
          return save_scenario(build_counterexample(
              n, kmax, Eigen::Vector2d(endowment[0], endowment[1]), mode_from_string(mode), u));
        },
        py::arg("n"), py::arg("kmax"), py::arg("endowment"), py::arg("mode") = "no_short",
        py::arg("utility") = "log", py::arg("p") = 0.5,
        "Scenario document for the falling-price two-asset market.");

  m.def("solve",
        [](const std::string& text, double tol_gap) {
          MarketScenario s = parse(text);
          SolveOptions opt;
          opt.tol_gap = tol_gap;
          return structured(report::solve_report(s, solve(s, opt)));
        },
        py::arg("scenario"), py::arg("tol_gap") = 1e-7,
        "Maximize expected terminal utility; returns the solve report.");

  m.def("solve_value",
        [](const std::string& text, double tol_gap) {
          MarketScenario s = parse(text);
          SolveOptions opt;
          opt.tol_gap = tol_gap;
          return solve(s, opt).value;
        },
        py::arg("scenario"), py::arg("tol_gap") = 1e-7, "Optimal expected utility only.");

  m.def("shadow",
        [](const std::string& text, double tol_check) {
          MarketScenario s = parse(text);
          SolveReport r = solve(s);
          CrossCheck check = s.tree.size() <= 80 ? CrossCheck::Full : CrossCheck::Sampled;
          PriceSystem z = extract_shadow(s, r, check);
          Json j;
          j["value"] = report::real(r.value);
          j["system"] = report::price_system(z);
          j["verification"] = report::verification(verify_price_system(s, z));
          j["certificate"] = report::certificate(certify_shadow(s, z, r, tol_check));
          j["frictionless_value"] = report::real(frictionless_solve(s, z).value);
          return structured(j);
        },
        py::arg("scenario"), py::arg("tol_check") = 1e-6,
        "Extract, verify and certify the marginal price system.");

  m.def("pins",
        [](const std::string& text, double tol) {
          MarketScenario s = parse(text);
          return structured(report::pin_set(pin_constraints(s, solve(s), tol)));
        },
        py::arg("scenario"), py::arg("tol") = 1e-7,
        "Price pins forced by the optimal trades.");

  m.def("diagnose",
        [](const std::string& text) {
          MarketScenario s = parse(text);
          SolveReport r = solve(s);
          SystemKind kind = s.mode == Mode::Unconstrained ? SystemKind::Martingale
                                                          : SystemKind::Supermartingale;
          auto outcome = find_pinned_price_system(s, pin_constraints(s, r, 1e-7), kind);
          Json j;
          if (std::holds_alternative<PriceSystem>(outcome)) {
            j["exists"] = true;
            j["system"] = report::price_system(std::get<PriceSystem>(outcome));
          } else {
            j["exists"] = false;
            j["certificate"] = report::infeasibility(std::get<InfeasibilityCertificate>(outcome));
          }
          return structured(j);
        },
        py::arg("scenario"),
        "Search a price system matching the optimal trades, or certify none exists.");

  m.def("scps",
        [](const std::string& text) -> py::object {
          MarketScenario s = parse(text);
          auto z = find_scps(s);
          if (!z) return py::none();
          return py::str(structured(report::price_system(*z)));
        },
        py::arg("scenario"), "Strictly consistent price system, or None.");

  m.def("arbitrage",
        [](const std::string& text) {
          MarketScenario s = parse(text);
          if (!s.has_prices()) fail("ValidationError", "scenario carries no price map");
          return structured(report::arbitrage(detect_arbitrage(s, s.node_prices, s.mode)));
        },
        py::arg("scenario"), "Frictionless arbitrage test of the scenario's price map.");

  m.def("brute_force_value",
        [](const std::string& text, double grid) { return brute_force_value(parse(text), grid); },
        py::arg("scenario"), py::arg("grid") = 1e-3,
        "Exhaustive-search optimum for tiny two-asset scenarios.");
}
