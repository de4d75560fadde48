#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "scb/errors.hpp"
#include "scb/optimize.hpp"
#include "scb/simulate.hpp"
#include "scb/types.hpp"

namespace scb {

// Sufficient statistics for the non-contextual learners. The counters split
// every view into exactly one bucket: accepts, skips (refused without
// quitting), or abandons, so sum(views) == sum(accepts) + skips + abandons
// always holds.
struct LearnerState {
  std::vector<std::uint64_t> views;    // times each message was displayed
  std::vector<std::uint64_t> accepts;  // times each message was taken
  std::uint64_t skips = 0;             // refused-and-stayed events, all messages
  std::uint64_t abandons = 0;          // users who quit mid-sequence
  std::uint64_t episodes = 0;          // users served so far

  explicit LearnerState(int n)
      : views(static_cast<std::size_t>(n), 0),
        accepts(static_cast<std::size_t>(n), 0) {
    if (n < 1) throw ConstraintViolation("learner needs at least one message");
  }

  int num_messages() const { return static_cast<int>(views.size()); }

  // Trials informing the continuation estimate: every refused view resolves
  // to either a skip (continue) or an abandonment (stop).
  std::uint64_t turndowns() const { return skips + abandons; }

  // Fold one observed episode into the counters.
  void apply(const EpisodeOutcome& outcome) {
    for (int i : outcome.shown) {
      ++views[static_cast<std::size_t>(i)];
    }
    if (outcome.terminal == Terminal::kAccepted) {
      ++accepts[static_cast<std::size_t>(outcome.accepted)];
    }
    skips += static_cast<std::uint64_t>(outcome.skip_events);
    if (outcome.terminal == Terminal::kAbandoned) {
      ++abandons;
    }
    ++episodes;
  }
};

// Plug-in estimates. A message never shown has no acceptance estimate, and
// until some view has been refused there is no continuation estimate;
// nullopt marks both, and consumers decide what optimism that deserves.
struct PointEstimates {
  std::vector<std::optional<double>> u_hat;
  std::optional<double> q_hat;
};

inline PointEstimates point_estimates(const LearnerState& st) {
  PointEstimates est;
  est.u_hat.resize(st.views.size());
  for (std::size_t i = 0; i < st.views.size(); ++i) {
    if (st.views[i] > 0) {
      est.u_hat[i] = static_cast<double>(st.accepts[i]) /
                     static_cast<double>(st.views[i]);
    }
  }
  if (st.turndowns() > 0) {
    est.q_hat = static_cast<double>(st.skips) /
                static_cast<double>(st.turndowns());
  }
  return est;
}

// Optimistic views of the model parameters, clamped into [0, 1]. An
// unobserved quantity is maximally optimistic (exactly 1).
struct UcbView {
  std::vector<double> u_ucb;
  double q_ucb = 1.0;
};

// Upper confidence bounds at user count t: estimate + sqrt(2 ln t / n),
// n being that estimate's own trial count.
inline UcbView ucb_view(const LearnerState& st, std::uint64_t t) {
  if (t < 1) throw ConstraintViolation("confidence bounds need t >= 1");
  const double log_term = 2.0 * std::log(static_cast<double>(t));
  UcbView view;
  view.u_ucb.resize(st.views.size(), 1.0);
  for (std::size_t i = 0; i < st.views.size(); ++i) {
    if (st.views[i] == 0) continue;
    const double mean = static_cast<double>(st.accepts[i]) /
                        static_cast<double>(st.views[i]);
    const double bonus = std::sqrt(log_term / static_cast<double>(st.views[i]));
    view.u_ucb[i] = std::min(1.0, mean + bonus);
  }
  if (st.turndowns() > 0) {
    const double mean = static_cast<double>(st.skips) /
                        static_cast<double>(st.turndowns());
    const double bonus =
        std::sqrt(log_term / static_cast<double>(st.turndowns()));
    view.q_ucb = std::min(1.0, mean + bonus);
  }
  return view;
}

// Result of serving one user: what was offered and how it went. The policy
// has already folded the outcome into its state.
struct StepResult {
  Sequence offered;
  EpisodeOutcome outcome;
};

// Optimism-in-the-face-of-uncertainty policy: plan with the exact optimizer,
// but feed it upper confidence bounds instead of the truth. `run` maps an
// offered Sequence to the EpisodeOutcome one fresh user produced.
template <typename Runner>
StepResult algorithm1_step(LearnerState& st, const MessageCatalog& catalog,
                           double cost, Runner&& run) {
  detail::check_same_size(catalog, st.views.size(), "learner state");
  // The arriving user is served with the optimistic view as of the previous
  // round: log term at the state's own episode count (floored at 1; with no
  // episodes every bound is 1 anyway and the log never enters).
  const UcbView view = ucb_view(st, std::max<std::uint64_t>(st.episodes, 1));
  StepResult step;
  step.offered =
      optimal_sequence(catalog.revenues, view.u_ucb, 1.0 - view.q_ucb, cost);
  step.outcome = run(step.offered);
  st.apply(step.outcome);
  return step;
}

namespace detail {

// Explore-threshold rule shared by the benchmark policies: a message is
// under-explored while its view count is below gamma * ln(t). Never-shown
// messages always qualify (ln(1) = 0 would otherwise let the threshold pass
// them by). Returns the least-viewed qualifying index, ties to the smallest,
// or -1 when every message is sufficiently explored.
inline int underexplored_message(const LearnerState& st, std::uint64_t t,
                                 double gamma) {
  const double threshold = gamma * std::log(static_cast<double>(t));
  int pick = -1;
  for (std::size_t i = 0; i < st.views.size(); ++i) {
    const double v = static_cast<double>(st.views[i]);
    if (st.views[i] == 0 || v < threshold) {
      if (pick < 0 || st.views[i] < st.views[static_cast<std::size_t>(pick)]) {
        pick = static_cast<int>(i);
      }
    }
  }
  return pick;
}

// Exploit with the plug-in model: unknown quantities resolve optimistically
// to 1, known ones to their point estimates.
inline Sequence greedy_sequence(const LearnerState& st,
                                const MessageCatalog& catalog, double cost) {
  const PointEstimates est = point_estimates(st);
  std::vector<double> u(st.views.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = est.u_hat[i].value_or(1.0);
  }
  const double q = est.q_hat.value_or(1.0);
  return optimal_sequence(catalog.revenues, u, 1.0 - q, cost);
}

}  // namespace detail

// Forced-exploration baseline with singleton probes: when some message is
// under-explored, offer it alone (a clean acceptance trial); otherwise act
// greedily on point estimates.
template <typename Runner>
StepResult benchmark1_step(LearnerState& st, const MessageCatalog& catalog,
                           double cost, double gamma, Runner&& run) {
  detail::check_same_size(catalog, st.views.size(), "learner state");
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw ConstraintViolation("exploration rate gamma must be positive");
  }
  const std::uint64_t t = st.episodes + 1;
  StepResult step;
  const int probe = detail::underexplored_message(st, t, gamma);
  if (probe >= 0) {
    step.offered = Sequence{{probe}};
  } else {
    step.offered = detail::greedy_sequence(st, catalog, cost);
  }
  step.outcome = run(step.offered);
  st.apply(step.outcome);
  return step;
}

// Forced-exploration baseline that keeps earning while probing: the
// under-explored message leads, and the greedy tail (at point estimates)
// follows it.
template <typename Runner>
StepResult benchmark2_step(LearnerState& st, const MessageCatalog& catalog,
                           double cost, double gamma, Runner&& run) {
  detail::check_same_size(catalog, st.views.size(), "learner state");
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw ConstraintViolation("exploration rate gamma must be positive");
  }
  const std::uint64_t t = st.episodes + 1;
  StepResult step;
  const int probe = detail::underexplored_message(st, t, gamma);
  if (probe >= 0) {
    const PointEstimates est = point_estimates(st);
    std::vector<double> u(st.views.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = est.u_hat[i].value_or(1.0);
    }
    const double q = est.q_hat.value_or(1.0);
    step.offered = optimal_sequence_with_fixed_head(catalog.revenues, u,
                                                    1.0 - q, cost, probe);
  } else {
    step.offered = detail::greedy_sequence(st, catalog, cost);
  }
  step.outcome = run(step.offered);
  st.apply(step.outcome);
  return step;
}

}  // namespace scb
