#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "scb/errors.hpp"

namespace scb {

// The messages the platform can send, identified by index 0..N-1. Each
// carries the revenue collected if the user accepts it.
struct MessageCatalog {
  std::vector<double> revenues;

  explicit MessageCatalog(std::vector<double> r) : revenues(std::move(r)) {
    if (revenues.empty()) {
      throw ConstraintViolation("catalog needs at least one message");
    }
    for (std::size_t i = 0; i < revenues.size(); ++i) {
      if (!std::isfinite(revenues[i]) || revenues[i] < 0.0) {
        throw ConstraintViolation("revenue for message " + std::to_string(i) +
                                  " must be finite and nonnegative");
      }
    }
  }

  int size() const { return static_cast<int>(revenues.size()); }
};

// Ground truth the learner does not see: per-message acceptance probabilities
// and the per-message abandonment hazard. Patience is geometric: after every
// unsatisfying message the user quits with probability p, so the continue
// probability is q = 1 - p.
struct EnvironmentParams {
  std::vector<double> valuations;  // u_i, each in [0, 1)
  double abandon_prob;             // p, in [0, 1]
  double abandon_cost;             // c >= 0, charged when the user quits

  EnvironmentParams(std::vector<double> u, double p, double c)
      : valuations(std::move(u)), abandon_prob(p), abandon_cost(c) {
    if (valuations.empty()) {
      throw ConstraintViolation("environment needs at least one valuation");
    }
    for (std::size_t i = 0; i < valuations.size(); ++i) {
      if (!std::isfinite(valuations[i]) || valuations[i] < 0.0 ||
          valuations[i] >= 1.0) {
        throw ConstraintViolation("valuation for message " + std::to_string(i) +
                                  " must lie in [0, 1)");
      }
    }
    if (!std::isfinite(abandon_prob) || abandon_prob < 0.0 ||
        abandon_prob > 1.0) {
      throw ConstraintViolation("abandonment probability must lie in [0, 1]");
    }
    if (!std::isfinite(abandon_cost) || abandon_cost < 0.0) {
      throw ConstraintViolation("abandonment cost must be finite and nonnegative");
    }
  }

  double continue_prob() const { return 1.0 - abandon_prob; }
  int size() const { return static_cast<int>(valuations.size()); }
};

// An ordered, duplicate-free list of message indices. Position is display
// order: order[0] is shown first. Empty means "send nothing", which is a
// legal (and sometimes optimal) choice.
struct Sequence {
  std::vector<int> order;

  Sequence() = default;
  explicit Sequence(std::vector<int> idx) : order(std::move(idx)) {}

  int length() const { return static_cast<int>(order.size()); }
  bool empty() const { return order.empty(); }
  bool contains(int i) const {
    for (int j : order) {
      if (j == i) return true;
    }
    return false;
  }

  // Every index must be in [0, n) and appear at most once.
  void validate_against(int n) const {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int i : order) {
      if (i < 0 || i >= n) {
        throw ConstraintViolation("sequence index " + std::to_string(i) +
                                  " outside catalog of size " + std::to_string(n));
      }
      if (seen[static_cast<std::size_t>(i)]) {
        throw ConstraintViolation("sequence repeats message " + std::to_string(i));
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }

  bool operator==(const Sequence&) const = default;
};

// Full distribution of how one offered sequence resolves, plus its value.
struct PayoffBreakdown {
  std::vector<double> select_probs;  // P(user accepts message i), per catalog index
  double abandon_prob = 0.0;         // P(user quits mid-sequence)
  double expected_payoff = 0.0;      // revenue minus expected abandonment cost
};

namespace detail {

// Shared cross-checks for operations that pair a catalog with parameters.
inline void check_same_size(const MessageCatalog& catalog, std::size_t n_values,
                            const char* what) {
  if (static_cast<std::size_t>(catalog.size()) != n_values) {
    throw ConstraintViolation(std::string(what) +
                              " length does not match catalog size");
  }
}

}  // namespace detail

}  // namespace scb
