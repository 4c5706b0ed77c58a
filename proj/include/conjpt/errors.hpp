#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace conjpt {

/// Malformed expression text. `offset` is the byte position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation outside the domain of an elementary function (log of a nonpositive value, x/0).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver failed: Newton non-convergence, blow-up, singular matrix.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string solver, const std::string& what, std::vector<double> point = {})
      : std::runtime_error(solver + ": " + what + format_point(point)),
        solver_(std::move(solver)),
        point_(std::move(point)) {}

  const std::string& solver() const noexcept { return solver_; }
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  static std::string format_point(const std::vector<double>& p) {
    if (p.empty()) return {};
    std::string s = " (z = [";
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(p[i]);
    }
    return s + "])";
  }

  std::string solver_;
  std::vector<double> point_;
};

/// An internal consistency check failed. Indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace conjpt
