#pragma once

#include <string>

#include "tcmarket/jsonio.hpp"
#include "tcmarket/scenario.hpp"
#include "tcmarket/shadow.hpp"
#include "tcmarket/solve.hpp"

namespace tcmarket::report {

enum class Format { Text, Structured };
Format format_from_string(const std::string& s);  // throws ParseError

// All builders produce ordered JSON with reals rendered as 17-digit decimal
// strings (the scenario convention), so structured reports are byte-stable
// across runs and platforms.
Json real(double x);
Json vec(const Eigen::VectorXd& v);

Json solve_report(const MarketScenario& s, const SolveReport& r);
Json price_system(const PriceSystem& z);
Json verification(const VerificationReport& rep);
Json certificate(const ShadowCertificate& c);
Json pin_set(const PinSet& pins);
Json infeasibility(const InfeasibilityCertificate& cert);
Json arbitrage(const ArbitrageResult& res);
Json deflation(const DeflationReport& rep);

// Structured: canonical JSON text.  Text: an indented human-readable view of
// the same document (derived, never hand-assembled).
std::string render(const Json& doc, Format format);

}  // namespace tcmarket::report
