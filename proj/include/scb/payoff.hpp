#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scb/errors.hpp"
#include "scb/types.hpp"

namespace scb {

namespace detail {

// The raw kernels accept valuations in the closed interval [0, 1]: optimistic
// upper-confidence values can sit exactly at 1, and the formulas remain well
// defined there. Ground truth enters through EnvironmentParams, which is
// stricter ([0, 1)).
inline void check_model_inputs(const std::vector<double>& revenues,
                               const std::vector<double>& valuations,
                               double p, double c, const Sequence& seq) {
  if (revenues.size() != valuations.size()) {
    throw ConstraintViolation("revenues and valuations differ in length");
  }
  for (std::size_t i = 0; i < valuations.size(); ++i) {
    if (!std::isfinite(valuations[i]) || valuations[i] < 0.0 ||
        valuations[i] > 1.0) {
      throw ConstraintViolation("valuation for message " + std::to_string(i) +
                                " must lie in [0, 1]");
    }
    if (!std::isfinite(revenues[i]) || revenues[i] < 0.0) {
      throw ConstraintViolation("revenue for message " + std::to_string(i) +
                                " must be finite and nonnegative");
    }
  }
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw ConstraintViolation("abandonment probability must lie in [0, 1]");
  }
  if (!std::isfinite(c) || c < 0.0) {
    throw ConstraintViolation("abandonment cost must be finite and nonnegative");
  }
  seq.validate_against(static_cast<int>(revenues.size()));
}

}  // namespace detail

// Resolves an offered sequence against the model in one forward pass.
//
// The user views messages in order. At each one they accept with probability
// u_i (ending the episode with revenue r_i); otherwise they abandon with
// probability p (costing c) or continue to the next message. Tracking
// reach = P(still present, nothing accepted yet) gives every quantity:
//   accept at position l:  reach * u
//   abandon at position l: reach * (1 - u) * p
// After the loop, reach holds the probability the user outlasted the whole
// sequence without accepting, so selection + abandonment + residual = 1.
inline PayoffBreakdown sequence_breakdown(const std::vector<double>& revenues,
                                          const std::vector<double>& valuations,
                                          double p, double c,
                                          const Sequence& seq) {
  detail::check_model_inputs(revenues, valuations, p, c, seq);
  const double q = 1.0 - p;
  PayoffBreakdown out;
  out.select_probs.assign(revenues.size(), 0.0);
  double reach = 1.0;
  for (int i : seq.order) {
    const double u = valuations[static_cast<std::size_t>(i)];
    out.select_probs[static_cast<std::size_t>(i)] = reach * u;
    const double miss = reach * (1.0 - u);
    out.abandon_prob += miss * p;
    reach = miss * q;
  }
  double revenue = 0.0;
  for (std::size_t i = 0; i < revenues.size(); ++i) {
    revenue += revenues[i] * out.select_probs[i];
  }
  out.expected_payoff = revenue - c * out.abandon_prob;
  return out;
}

// Expected payoff only; convenience for regret accounting and policy search.
inline double sequence_payoff(const std::vector<double>& revenues,
                              const std::vector<double>& valuations, double p,
                              double c, const Sequence& seq) {
  return sequence_breakdown(revenues, valuations, p, c, seq).expected_payoff;
}

inline PayoffBreakdown expected_payoff(const MessageCatalog& catalog,
                                       const EnvironmentParams& env,
                                       const Sequence& seq) {
  detail::check_same_size(catalog, env.valuations.size(), "valuations");
  return sequence_breakdown(catalog.revenues, env.valuations, env.abandon_prob,
                            env.abandon_cost, seq);
}

// P(user accepts message i), indexed over the whole catalog; zero for
// messages the sequence does not offer.
inline std::vector<double> selection_probabilities(const MessageCatalog& catalog,
                                                   const EnvironmentParams& env,
                                                   const Sequence& seq) {
  return expected_payoff(catalog, env, seq).select_probs;
}

inline double abandonment_probability(const MessageCatalog& catalog,
                                      const EnvironmentParams& env,
                                      const Sequence& seq) {
  return expected_payoff(catalog, env, seq).abandon_prob;
}

// Expected payoff when patience follows an arbitrary distribution instead of
// the geometric one. survival[k] = P(patience > k viewed-and-refused
// messages); survival[0] must equal 1 and the curve must be nonincreasing
// and nonnegative. A sequence of length m reads survival[0..m], so the
// vector must have at least m + 1 entries. With survival[k] = q^k this
// reduces exactly to the geometric model above.
inline double expected_payoff_general_w(const std::vector<double>& revenues,
                                        const std::vector<double>& valuations,
                                        const std::vector<double>& survival,
                                        double cost, const Sequence& seq) {
  detail::check_model_inputs(revenues, valuations, 0.0, cost, seq);
  if (survival.empty() || survival.front() != 1.0) {
    throw ConstraintViolation("survival curve must start at 1");
  }
  for (std::size_t k = 0; k < survival.size(); ++k) {
    if (!std::isfinite(survival[k]) || survival[k] < 0.0) {
      throw ConstraintViolation("survival values must be finite and nonnegative");
    }
    if (k > 0 && survival[k] > survival[k - 1]) {
      throw ConstraintViolation("survival curve must be nonincreasing");
    }
  }
  if (survival.size() < static_cast<std::size_t>(seq.length()) + 1) {
    throw ConstraintViolation(
        "survival curve too short: need one entry past the sequence length");
  }
  double payoff = 0.0;
  double miss_prod = 1.0;  // P(none of the first l-1 messages accepted)
  for (int pos = 0; pos < seq.length(); ++pos) {
    const std::size_t i = static_cast<std::size_t>(seq.order[pos]);
    const std::size_t l = static_cast<std::size_t>(pos) + 1;
    payoff += survival[l - 1] * miss_prod * valuations[i] * revenues[i];
    miss_prod *= 1.0 - valuations[i];
    // Patience ran out exactly at step l and nothing before (or at) l landed.
    payoff -= cost * (survival[l - 1] - survival[l]) * miss_prod;
  }
  return payoff;
}

inline double expected_payoff_general_w(const MessageCatalog& catalog,
                                        const std::vector<double>& valuations,
                                        const std::vector<double>& survival,
                                        double cost, const Sequence& seq) {
  detail::check_same_size(catalog, valuations.size(), "valuations");
  return expected_payoff_general_w(catalog.revenues, valuations, survival, cost,
                                   seq);
}

}  // namespace scb
