#pragma once

#include <string>

namespace tcmarket {

// Strictly concave, strictly increasing utility on (0, inf) with infinite
// marginal utility at 0 and vanishing marginal utility at infinity.  Two
// families: logarithmic, and power x^p / p for p < 1, p != 0.
struct Utility {
  enum class Kind { Log, Power };

  Kind kind = Kind::Log;
  double p = 0.0;  // exponent, used only for Kind::Power

  static Utility log();
  static Utility power(double p);  // throws ParameterError unless p < 1, p != 0

  double value(double x) const;             // U(x); DomainError for x <= 0
  double marginal(double x) const;          // U'(x)
  double conjugate(double y) const;         // sup_x { U(x) - x y }, y > 0
  double marginal_inverse(double y) const;  // (U')^{-1}(y), y > 0

  std::string name() const;  // "log" or "power(p)"
};

}  // namespace tcmarket
