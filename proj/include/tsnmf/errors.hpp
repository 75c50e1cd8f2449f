#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsnmf {

/// Operand shapes do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A supervised document has no labels, or a label falls outside the topic range.
class InvalidSupervision : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file or record.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nothing left to work with (empty corpus after filtering, empty vocabulary).
class EmptyDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An update produced NaN or Inf.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace tsnmf
