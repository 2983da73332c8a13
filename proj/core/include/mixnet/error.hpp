#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixnet {

/// Operand shapes do not satisfy an operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure during optimization (non-finite loss and similar).
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace mixnet
