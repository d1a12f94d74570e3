#ifndef ADARAND_ERRORS_HPP
#define ADARAND_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adarand {

/// Precondition or shape-contract failure on a public operation.
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Non-finite value, divergence, or iterative non-convergence.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

}  // namespace adarand

#endif
