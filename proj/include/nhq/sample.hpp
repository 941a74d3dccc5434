#pragma once

#include <complex>

namespace nhq {

/// A complex value that may be undefined (a vanishing denominator).
struct Sample {
  std::complex<double> value{0.0, 0.0};
  bool defined = true;

  static Sample undefined() { return {{0.0, 0.0}, false}; }
};

}  // namespace nhq
