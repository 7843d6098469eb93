#pragma once

#include <stdexcept>
#include <string>

namespace cgzsl {

// Error hierarchy. The CLI maps these onto exit codes:
// ValidationError/ShapeError/ScheduleError/ContractError/IndexError -> 2,
// NumericError -> 3, IoError/FormatError -> 1.

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a loss term evaluates to NaN/Inf; carries the term name.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(std::string term)
      : std::runtime_error("non-finite value in " + term), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace cgzsl
