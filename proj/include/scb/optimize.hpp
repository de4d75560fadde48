#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scb/errors.hpp"
#include "scb/payoff.hpp"
#include "scb/types.hpp"

namespace scb {

// One message's standing in the optimal-ordering problem.
//
// marginal is the value of appending the message to the very front of an
// empty sequence: r*u - c*p*(1-u). score is the priority index
//   theta = (r*u - c*p*(1-u)) / (1 - q*(1-u)),
// whose denominator p + u*(1-p) is positive except when p = 0 and u = 0.
// The two always share a sign, so "score > 0" and "marginal > 0" pick the
// same support.
struct ScoredMessage {
  int index = -1;
  double score = 0.0;
  double marginal = 0.0;
};

// Priority score for a single message. Throws DegenerateScore on the 0/0
// form (p = 0 and u = 0): such a message can never resolve the episode
// either way and has no defined priority.
inline double score(double revenue, double valuation, double cost, double p) {
  if (!std::isfinite(revenue) || revenue < 0.0) {
    throw ConstraintViolation("revenue must be finite and nonnegative");
  }
  if (!std::isfinite(valuation) || valuation < 0.0 || valuation > 1.0) {
    throw ConstraintViolation("valuation must lie in [0, 1]");
  }
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw ConstraintViolation("abandonment probability must lie in [0, 1]");
  }
  if (!std::isfinite(cost) || cost < 0.0) {
    throw ConstraintViolation("abandonment cost must be finite and nonnegative");
  }
  const double denom = p + valuation * (1.0 - p);
  if (denom == 0.0) {
    throw DegenerateScore("score undefined for p = 0 with valuation 0");
  }
  return (revenue * valuation - cost * p * (1.0 - valuation)) / denom;
}

// Scores for every non-degenerate message in the catalog (degenerate ones,
// p = 0 with u_i = 0, are skipped: they have zero marginal value and no
// defined priority, and no optimal sequence ever includes them).
inline std::vector<ScoredMessage> scored_messages(
    const std::vector<double>& revenues, const std::vector<double>& valuations,
    double p, double cost) {
  detail::check_model_inputs(revenues, valuations, p, cost, Sequence{});
  std::vector<ScoredMessage> out;
  out.reserve(revenues.size());
  for (std::size_t i = 0; i < revenues.size(); ++i) {
    const double u = valuations[i];
    const double denom = p + u * (1.0 - p);
    if (denom == 0.0) continue;
    ScoredMessage m;
    m.index = static_cast<int>(i);
    m.marginal = revenues[i] * u - cost * p * (1.0 - u);
    m.score = m.marginal / denom;
    out.push_back(m);
  }
  return out;
}

// The exact maximizer of expected payoff over all ordered, duplicate-free
// sequences: keep exactly the messages with positive marginal value and sort
// them by descending score (ties broken by ascending index, which makes the
// result deterministic; equal-score orders are payoff-equivalent).
inline Sequence optimal_sequence(const std::vector<double>& revenues,
                                 const std::vector<double>& valuations,
                                 double p, double cost) {
  std::vector<ScoredMessage> scored = scored_messages(revenues, valuations, p, cost);
  std::vector<ScoredMessage> keep;
  keep.reserve(scored.size());
  for (const ScoredMessage& m : scored) {
    if (m.marginal > 0.0) keep.push_back(m);
  }
  std::sort(keep.begin(), keep.end(),
            [](const ScoredMessage& a, const ScoredMessage& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.index < b.index;
            });
  Sequence seq;
  seq.order.reserve(keep.size());
  for (const ScoredMessage& m : keep) seq.order.push_back(m.index);
  return seq;
}

inline Sequence optimal_sequence(const MessageCatalog& catalog,
                                 const EnvironmentParams& env) {
  detail::check_same_size(catalog, env.valuations.size(), "valuations");
  return optimal_sequence(catalog.revenues, env.valuations, env.abandon_prob,
                          env.abandon_cost);
}

// Best sequence among those forced to open with `head`: the head leads, and
// the rest is the usual positive-marginal tail in score order (head removed
// if it appears there). Used by policies that must show a particular message
// for exploration but want to exploit with the remainder.
inline Sequence optimal_sequence_with_fixed_head(
    const std::vector<double>& revenues, const std::vector<double>& valuations,
    double p, double cost, int head) {
  if (head < 0 || static_cast<std::size_t>(head) >= revenues.size()) {
    throw ConstraintViolation("fixed head index " + std::to_string(head) +
                              " outside catalog");
  }
  Sequence tail = optimal_sequence(revenues, valuations, p, cost);
  Sequence seq;
  seq.order.reserve(tail.order.size() + 1);
  seq.order.push_back(head);
  for (int i : tail.order) {
    if (i != head) seq.order.push_back(i);
  }
  return seq;
}

inline Sequence optimal_sequence_with_fixed_head(const MessageCatalog& catalog,
                                                 const EnvironmentParams& env,
                                                 int head) {
  detail::check_same_size(catalog, env.valuations.size(), "valuations");
  return optimal_sequence_with_fixed_head(catalog.revenues, env.valuations,
                                          env.abandon_prob, env.abandon_cost,
                                          head);
}

}  // namespace scb
