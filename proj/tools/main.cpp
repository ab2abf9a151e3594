#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "tcmarket/report.hpp"
#include "tcmarket/scenario.hpp"
#include "tcmarket/shadow.hpp"
#include "tcmarket/solve.hpp"

using namespace tcmarket;

namespace {

struct Options {
  std::string input;
  std::string output;
  int n = 10;
  int kmax = 20;
  std::string endowment = "4,0";
  std::string mode = "no_short";
  std::string utility = "log";
  double p = 0.5;
  double grid = 0.0;
  double tol_gap = 1e-7;
  double tol_check = 1e-6;
  std::string format = "text";
};

int exit_code_for(const std::string& code) {
  // 1: the input is bad; 2: the solver could not deliver.
  if (code == "Infeasible" || code == "Unbounded" || code == "NotConverged" ||
      code == "NotOptimal" || code == "CrossCheckFailure")
    return 2;
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("ParameterError", "cannot open input file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output, std::ios::binary);
  if (!out) fail("ParameterError", "cannot open output file '" + o.output + "'");
  out << text;
}

Eigen::VectorXd parse_endowment(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) fail("ParseError", "empty endowment component");
    char* end = nullptr;
    double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0')
      fail("ParseError", "endowment component '" + item + "' is not a number");
    vals.push_back(v);
  }
  if (vals.empty()) fail("ParseError", "endowment must have at least one component");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

Json tolerances(const Options& o, bool with_grid = false) {
  Json t;
  t["tol_gap"] = report::real(o.tol_gap);
  t["tol_check"] = report::real(o.tol_check);
  if (with_grid && o.grid > 0.0) t["grid"] = report::real(o.grid);
  return t;
}

MarketScenario load_input(const Options& o) {
  if (o.input.empty()) fail("ParameterError", "--input is required for this command");
  return load_scenario(read_file(o.input));
}

SolveReport run_solve(const MarketScenario& s, const Options& o) {
  SolveOptions opt;
  opt.tol_gap = o.tol_gap;
  return solve(s, opt);
}

int dispatch(const std::string& cmd, const Options& o) {
  report::Format fmt = report::format_from_string(o.format);

  if (cmd == "counterexample") {
    Utility u = o.utility == "power" ? Utility::power(o.p) : Utility::log();
    Eigen::VectorXd x = parse_endowment(o.endowment);
    if (x.size() != 2) fail("ParameterError", "this market has two assets; --endowment needs 2 components");
    MarketScenario s =
        build_counterexample(o.n, o.kmax, Eigen::Vector2d(x(0), x(1)), mode_from_string(o.mode), u);
    emit(o, save_scenario(s));
    return 0;
  }

  MarketScenario s = load_input(o);

  if (cmd == "validate") {
    Json j;
    j["valid"] = true;
    j["assets"] = s.d;
    j["nodes"] = s.tree.size();
    j["horizon"] = s.tree.horizon;
    j["mode"] = to_string(s.mode);
    j["utility"] = s.utility.name();
    j["has_prices"] = s.has_prices();
    emit(o, report::render(j, fmt));
    return 0;
  }

  if (cmd == "solve") {
    SolveReport r = run_solve(s, o);
    Json j = report::solve_report(s, r);
    if (o.grid > 0.0) {
      double oracle = brute_force_value(s, o.grid);
      j["oracle_value"] = report::real(oracle);
      j["oracle_deviation"] = report::real(std::abs(oracle - r.value));
    }
    j["tolerances"] = tolerances(o, true);
    emit(o, report::render(j, fmt));
    return 0;
  }

  if (cmd == "shadow") {
    SolveReport r = run_solve(s, o);
    // Finite differences on every internal node are affordable on small
    // trees; large ones get a deterministic sample.
    CrossCheck check = s.tree.size() <= 80 ? CrossCheck::Full : CrossCheck::Sampled;
    PriceSystem z = extract_shadow(s, r, check);
    VerificationReport ver = verify_price_system(s, z);
    ShadowCertificate cert = certify_shadow(s, z, r, o.tol_check);
    SolveReport fr = frictionless_solve(s, z);
    Json j;
    j["value"] = report::real(r.value);
    j["frictionless_value"] = report::real(fr.value);
    j["value_agreement"] = report::real(std::abs(fr.value - r.value));
    j["system"] = report::price_system(z);
    j["verification"] = report::verification(ver);
    j["certificate"] = report::certificate(cert);
    j["tolerances"] = tolerances(o);
    emit(o, report::render(j, fmt));
    return 0;
  }

  if (cmd == "pins") {
    SolveReport r = run_solve(s, o);
    Json j = report::pin_set(pin_constraints(s, r, o.tol_check));
    j["tolerances"] = tolerances(o);
    emit(o, report::render(j, fmt));
    return 0;
  }

  if (cmd == "diagnose") {
    SolveReport r = run_solve(s, o);
    PinSet pins = pin_constraints(s, r, o.tol_check);
    SystemKind kind =
        s.mode == Mode::Unconstrained ? SystemKind::Martingale : SystemKind::Supermartingale;
    auto outcome = find_pinned_price_system(s, pins, kind);
    Json j;
    j["pins"] = report::pin_set(pins);
    j["kind"] = to_string(kind);
    if (std::holds_alternative<PriceSystem>(outcome)) {
      const PriceSystem& z = std::get<PriceSystem>(outcome);
      j["verdict"] = "price system exists";
      j["system"] = report::price_system(z);
    } else {
      j["verdict"] = "no shadow price: no " + to_string(kind) +
                     " system satisfies the pins of the optimal payoff";
      j["certificate"] = report::infeasibility(std::get<InfeasibilityCertificate>(outcome));
    }
    j["tolerances"] = tolerances(o);
    emit(o, report::render(j, fmt));
    return 0;
  }

  if (cmd == "scps") {
    auto z = find_scps(s);
    Json j;
    if (z) {
      j["found"] = true;
      j["system"] = report::price_system(*z);
    } else {
      j["found"] = false;
      j["detail"] = "no strictly consistent supermartingale price system";
    }
    emit(o, report::render(j, fmt));
    return 0;
  }

  if (cmd == "arbitrage") {
    if (!s.has_prices())
      fail("ValidationError", "scenario carries no per-node price map to test");
    ArbitrageResult res = detect_arbitrage(s, s.node_prices, s.mode);
    emit(o, report::render(report::arbitrage(res), fmt));
    return 0;
  }

  fail("ParameterError", "unknown command '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Portfolio optimization on event trees with proportional transaction costs"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input) cmd->add_option("--input", o.input, "scenario file")->required();
    cmd->add_option("--output", o.output, "write the report here instead of stdout");
    cmd->add_option("--format", o.format, "report format: text|structured")
        ->check(CLI::IsMember({"text", "structured"}));
    cmd->add_option("--tol-gap", o.tol_gap, "duality-gap tolerance for the solver")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol-check", o.tol_check, "tolerance for certificates and pins")
        ->check(CLI::PositiveNumber);
    return cmd;
  };

  add_common(app.add_subcommand("validate", "check a scenario file"), true);
  auto* solve_cmd = add_common(app.add_subcommand("solve", "maximize expected utility"), true);
  solve_cmd->add_option("--grid", o.grid, "also run the exhaustive oracle with this step")
      ->check(CLI::PositiveNumber);
  add_common(app.add_subcommand("shadow", "extract, verify and certify marginal prices"), true);
  add_common(app.add_subcommand("pins", "price pins forced by the optimal trades"), true);
  add_common(app.add_subcommand("diagnose", "search a pinned price system or certify none"), true);
  add_common(app.add_subcommand("scps", "search a strictly consistent price system"), true);
  add_common(app.add_subcommand("arbitrage", "frictionless arbitrage test of the price map"), true);

  auto* gen = add_common(app.add_subcommand("counterexample", "emit the falling-price market"), false);
  gen->add_option("--n", o.n, "tail-probability exponent")->check(CLI::PositiveNumber);
  gen->add_option("--kmax", o.kmax, "number of retained branches")->check(CLI::PositiveNumber);
  gen->add_option("--endowment", o.endowment, "comma-separated initial holdings");
  gen->add_option("--mode", o.mode, "no_short|unconstrained")
      ->check(CLI::IsMember({"no_short", "unconstrained"}));
  gen->add_option("--utility", o.utility, "log|power")->check(CLI::IsMember({"log", "power"}));
  gen->add_option("--p", o.p, "power-utility exponent (p < 1, p != 0)");

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app.get_subcommands().front()->get_name(), o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
