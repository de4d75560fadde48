#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "scb/errors.hpp"
#include "scb/link.hpp"
#include "scb/rng.hpp"
#include "scb/types.hpp"

namespace scb {

// How an episode ended.
enum class Terminal {
  kAccepted,   // user took a message; payoff is its revenue
  kAbandoned,  // user quit mid-sequence; payoff is -cost
  kExhausted,  // sequence ran out (or was empty); payoff is 0
};

// Everything observable about one simulated user from the platform's side.
struct EpisodeOutcome {
  std::vector<int> shown;  // prefix of the offered sequence actually displayed
  Terminal terminal = Terminal::kExhausted;
  int accepted = -1;       // accepting message's index, or -1
  double payoff = 0.0;     // realized revenue, -cost, or 0
  int skip_events = 0;     // messages refused without triggering abandonment
};

namespace detail {

// One user walking an offered sequence. `valuation_of(i)` supplies the
// acceptance probability; `continue_prob` is evaluated per-call so both the
// flat and contextual environments share the loop. Draw order is fixed and
// part of the reproducibility contract: at each position, first the accept
// draw, then (only if refused) the abandon draw.
template <typename ValuationOf>
EpisodeOutcome walk_sequence(const std::vector<double>& revenues,
                             ValuationOf&& valuation_of, double continue_prob,
                             double cost, const Sequence& seq, RngStream& rng) {
  EpisodeOutcome out;
  out.shown.reserve(seq.order.size());
  const double abandon_prob = 1.0 - continue_prob;
  for (int i : seq.order) {
    out.shown.push_back(i);
    if (rng.bernoulli(valuation_of(i))) {
      out.terminal = Terminal::kAccepted;
      out.accepted = i;
      out.payoff = revenues[static_cast<std::size_t>(i)];
      return out;
    }
    if (rng.bernoulli(abandon_prob)) {
      out.terminal = Terminal::kAbandoned;
      out.payoff = -cost;
      return out;
    }
    ++out.skip_events;
  }
  out.terminal = Terminal::kExhausted;
  out.payoff = 0.0;
  return out;
}

}  // namespace detail

// Simulate one user against the flat environment.
inline EpisodeOutcome run_episode(const MessageCatalog& catalog,
                                  const EnvironmentParams& env,
                                  const Sequence& seq, RngStream& rng) {
  detail::check_same_size(catalog, env.valuations.size(), "valuations");
  seq.validate_against(catalog.size());
  return detail::walk_sequence(
      catalog.revenues,
      [&](int i) { return env.valuations[static_cast<std::size_t>(i)]; },
      env.continue_prob(), env.abandon_cost, seq, rng);
}

// Axis-aligned box the raw feature coordinates are drawn from. The model
// feature vector x prepends a constant intercept: x = (1, z_1, ..., z_k).
struct FeatureBox {
  std::vector<std::pair<double, double>> ranges;  // per-coordinate [lo, hi]

  explicit FeatureBox(std::vector<std::pair<double, double>> r)
      : ranges(std::move(r)) {
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      if (!std::isfinite(ranges[i].first) || !std::isfinite(ranges[i].second) ||
          ranges[i].first > ranges[i].second) {
        throw ConstraintViolation("feature range " + std::to_string(i) +
                                  " must be a finite [lo, hi] interval");
      }
    }
  }

  // Model dimension, intercept included.
  int dim() const { return static_cast<int>(ranges.size()) + 1; }
};

// Draw one user's feature vector, intercept first. Coordinates are drawn in
// index order (reproducibility contract).
inline std::vector<double> sample_features(const FeatureBox& box,
                                           RngStream& rng) {
  std::vector<double> x;
  x.reserve(box.ranges.size() + 1);
  x.push_back(1.0);
  for (const auto& [lo, hi] : box.ranges) {
    x.push_back(rng.uniform(lo, hi));
  }
  return x;
}

// Contextual ground truth: acceptance and continuation probabilities are
// logistic in the user's features. alpha drives the continue probability
// q(x) = mu(alpha . x); beta_i drives message i's valuation u_i(x) =
// mu(beta_i . x).
struct ContextualEnvironment {
  std::vector<double> alpha;               // continuation coefficients
  std::vector<std::vector<double>> betas;  // per-message valuation coefficients
  double abandon_cost;
  FeatureBox features;

  ContextualEnvironment(std::vector<double> a,
                        std::vector<std::vector<double>> b, double cost,
                        FeatureBox box)
      : alpha(std::move(a)),
        betas(std::move(b)),
        abandon_cost(cost),
        features(std::move(box)) {
    const std::size_t d = static_cast<std::size_t>(features.dim());
    if (alpha.size() != d) {
      throw ConstraintViolation("alpha length must match feature dimension");
    }
    if (betas.empty()) {
      throw ConstraintViolation("need at least one message coefficient vector");
    }
    for (const auto& beta : betas) {
      if (beta.size() != d) {
        throw ConstraintViolation("beta length must match feature dimension");
      }
    }
    if (!std::isfinite(abandon_cost) || abandon_cost < 0.0) {
      throw ConstraintViolation("abandonment cost must be finite and nonnegative");
    }
  }

  int dim() const { return features.dim(); }
  int num_messages() const { return static_cast<int>(betas.size()); }

  double valuation(int i, const std::vector<double>& x) const {
    return logistic_link(dot(betas[static_cast<std::size_t>(i)], x));
  }

  std::vector<double> valuations_at(const std::vector<double>& x) const {
    std::vector<double> u(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
      u[i] = logistic_link(dot(betas[i], x));
    }
    return u;
  }

  double continue_prob(const std::vector<double>& x) const {
    return logistic_link(dot(alpha, x));
  }

  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }
};

// Simulate one user with features x against the contextual environment.
inline EpisodeOutcome run_contextual_episode(const MessageCatalog& catalog,
                                             const ContextualEnvironment& env,
                                             const std::vector<double>& x,
                                             const Sequence& seq,
                                             RngStream& rng) {
  detail::check_same_size(catalog, env.betas.size(), "message coefficients");
  if (x.size() != static_cast<std::size_t>(env.dim())) {
    throw ConstraintViolation("feature vector has wrong dimension");
  }
  seq.validate_against(catalog.size());
  return detail::walk_sequence(
      catalog.revenues, [&](int i) { return env.valuation(i, x); },
      env.continue_prob(x), env.abandon_cost, seq, rng);
}

}  // namespace scb
