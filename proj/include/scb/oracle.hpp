#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "scb/errors.hpp"
#include "scb/payoff.hpp"
#include "scb/types.hpp"

namespace scb {

struct OracleResult {
  Sequence sequence;
  double payoff = 0.0;
};

namespace detail {

// Walks every ordered, duplicate-free sequence (all lengths, all orders,
// the empty sequence included) and keeps the best under `value`. Exact ties
// resolve to the lexicographically smallest index list so the result is
// deterministic. N! * 2^N blowup, hence the guard.
template <typename Value>
OracleResult enumerate_sequences(int n, int max_n, Value&& value) {
  if (n > max_n) {
    throw SizeGuardError("exhaustive enumeration refused: catalog size " +
                         std::to_string(n) + " exceeds guard " +
                         std::to_string(max_n));
  }
  OracleResult best;
  best.payoff = value(Sequence{});  // empty prefix: send nothing
  std::vector<int> prefix;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::function<void()> extend = [&]() {
    for (int i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      used[static_cast<std::size_t>(i)] = 1;
      prefix.push_back(i);
      Sequence candidate{prefix};
      const double v = value(candidate);
      if (v > best.payoff ||
          (v == best.payoff &&
           std::lexicographical_compare(candidate.order.begin(),
                                        candidate.order.end(),
                                        best.sequence.order.begin(),
                                        best.sequence.order.end()))) {
        best.sequence = candidate;
        best.payoff = v;
      }
      extend();
      prefix.pop_back();
      used[static_cast<std::size_t>(i)] = 0;
    }
  };
  extend();
  return best;
}

}  // namespace detail

// Ground-truth optimum by brute force. Deliberately has no shortcuts: it
// reuses the closed-form payoff for each candidate and nothing else, so it
// serves as an independent check on the score-based optimizer.
inline OracleResult enumerate_optimal(const MessageCatalog& catalog,
                                      const EnvironmentParams& env,
                                      int max_n = 8) {
  detail::check_same_size(catalog, env.valuations.size(), "valuations");
  return detail::enumerate_sequences(
      catalog.size(), max_n,
      [&](const Sequence& s) { return expected_payoff(catalog, env, s).expected_payoff; });
}

// Same search under an arbitrary patience distribution. There is no
// closed-form ordering rule in that setting, so enumeration is the only
// exact solver on offer.
inline OracleResult enumerate_optimal_general_w(
    const MessageCatalog& catalog, const std::vector<double>& valuations,
    const std::vector<double>& survival, double cost, int max_n = 8) {
  detail::check_same_size(catalog, valuations.size(), "valuations");
  if (survival.size() < static_cast<std::size_t>(catalog.size()) + 1) {
    throw ConstraintViolation(
        "survival curve too short for full-catalog sequences");
  }
  return detail::enumerate_sequences(catalog.size(), max_n,
                                     [&](const Sequence& s) {
                                       return expected_payoff_general_w(
                                           catalog.revenues, valuations,
                                           survival, cost, s);
                                     });
}

}  // namespace scb
