#pragma once

#include <stdexcept>
#include <string>

namespace loanvar {

// Argument outside an operation's mathematical domain (negative lifetime,
// non-positive Weibull parameter, non-finite input).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid structural configuration: network shape, config values.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Labels that contradict each other, e.g. a default recorded at the full term.
class InconsistencyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fitting or training could not proceed (no labels, divergence, NaN loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files and I/O failures.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loanvar
