#include "tcmarket/utility.hpp"

#include <cmath>
#include <cstdio>

#include "tcmarket/errors.hpp"

namespace tcmarket {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    fail("DomainError", std::string(what) + " must be positive and finite, got " + std::to_string(v));
}

}  // namespace

Utility Utility::log() { return Utility{Kind::Log, 0.0}; }

Utility Utility::power(double p) {
  if (!(p < 1.0) || p == 0.0 || !std::isfinite(p))
    fail("ParameterError", "power utility needs p < 1, p != 0, got " + std::to_string(p));
  return Utility{Kind::Power, p};
}

double Utility::value(double x) const {
  require_positive(x, "utility argument");
  return kind == Kind::Log ? std::log(x) : std::pow(x, p) / p;
}

double Utility::marginal(double x) const {
  require_positive(x, "utility argument");
  return kind == Kind::Log ? 1.0 / x : std::pow(x, p - 1.0);
}

double Utility::conjugate(double y) const {
  require_positive(y, "conjugate argument");
  if (kind == Kind::Log) return -std::log(y) - 1.0;
  return (1.0 - p) / p * std::pow(y, p / (p - 1.0));
}

double Utility::marginal_inverse(double y) const {
  require_positive(y, "marginal value");
  return kind == Kind::Log ? 1.0 / y : std::pow(y, 1.0 / (p - 1.0));
}

std::string Utility::name() const {
  if (kind == Kind::Log) return "log";
  char buf[48];
  std::snprintf(buf, sizeof buf, "power(%g)", p);
  return buf;
}

}  // namespace tcmarket
