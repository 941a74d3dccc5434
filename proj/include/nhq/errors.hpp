#pragma once

#include <stdexcept>
#include <string>

namespace nhq {

// Malformed input values: non-finite entries, bad dimensions, invalid parameters.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A precondition of an operation was violated (time ordering, hermiticity, ...).
class ContractError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// A normalizing trace vanished. Carries the evolution time at which it happened.
class SingularityError : public std::runtime_error {
public:
  SingularityError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

private:
  double time_;
};

// A long-time limit formula is requested outside the parameter set where it holds.
class DegenerateLimitError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace nhq
