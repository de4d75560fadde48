#pragma once

#include <cmath>

namespace scb {

// Logistic link mu(z) = 1 / (1 + exp(-z)), branched so neither side
// overflows: for z < 0 the naive form exp(-z) blows up first.
inline double logistic_link(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Derivative mu'(z) = mu(z) * (1 - mu(z)); the IRLS weight.
inline double logistic_link_deriv(double z) {
  const double m = logistic_link(z);
  return m * (1.0 - m);
}

}  // namespace scb
