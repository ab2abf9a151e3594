#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace tcmarket {

// All serialized reals are decimal strings with 17 significant digits: the
// shortest round-trip-exact rendering differs across standard libraries, so a
// fixed format keeps files byte-identical across platforms, and parsing the
// string back yields the identical double.
using Json = nlohmann::ordered_json;

std::string format_real(double v);

// Accepts either a decimal string (canonical) or a plain JSON number
// (lenient).  Throws Error("ParseError") otherwise.
double parse_real(const Json& j, const std::string& context);

// Strict field access helpers; throw Error("ParseError") naming the field.
const Json& require_field(const Json& j, const std::string& key);

}  // namespace tcmarket
