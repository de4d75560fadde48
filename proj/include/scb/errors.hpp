#pragma once

#include <stdexcept>
#include <string>

namespace scb {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid domain input: out-of-range probabilities, bad message indices,
// duplicate sequence entries, mismatched vector lengths, non-monotone
// survival curves.
struct ConstraintViolation : Error {
  using Error::Error;
};

// Priority score requested for a message with p = 0 and u = 0, where the
// score is a 0/0 form and genuinely undefined.
struct DegenerateScore : Error {
  using Error::Error;
};

// Model fitting failed: non-finite estimates, or a linear solve that stayed
// non-positive-definite even after re-regularization.
struct EstimationFailure : Error {
  using Error::Error;
};

// Exhaustive enumeration refused to run: instance exceeds the size guard.
struct SizeGuardError : Error {
  using Error::Error;
};

// Experiment configuration could not be parsed or failed validation.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace scb
