#include "tcmarket/jsonio.hpp"

#include <cstdio>
#include <cstdlib>

#include "tcmarket/errors.hpp"

namespace tcmarket {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const Json& j, const std::string& context) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string& s = j.get_ref<const std::string&>();
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || (end && *end != '\0'))
      fail("ParseError", context + ": not a decimal number: '" + s + "'");
    return v;
  }
  fail("ParseError", context + ": expected a number or decimal string");
}

const Json& require_field(const Json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) fail("ParseError", "missing field '" + key + "'");
  return *it;
}

}  // namespace tcmarket
