#pragma once

#include <stdexcept>
#include <string>

namespace tcmarket {

// All library failures are reported through a single exception type carrying a
// stable machine-readable code plus a human-readable message.  Codes in use:
//
//   NonPositiveEntry, DiagonalNotOne, TriangleViolation   (bid-ask validation)
//   ParseError, ValidationError, ParameterError           (scenario handling)
//   LeafNode, DomainError, TooLarge                       (misc preconditions)
//   Infeasible, Unbounded, NotConverged                   (solvers)
//   NotOptimal, CrossCheckFailure                         (price extraction)
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tcmarket
