#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scb/errors.hpp"
#include "scb/learner.hpp"
#include "scb/linalg.hpp"
#include "scb/link.hpp"
#include "scb/optimize.hpp"
#include "scb/simulate.hpp"
#include "scb/types.hpp"

namespace scb {

// One aggregated binomial observation: `successes` of `trials` Bernoulli
// draws at features x came up 1. Plain binary outcomes use trials = 1.
struct GlmObservation {
  std::vector<double> x;
  double successes = 0.0;
  double trials = 1.0;
};

// Ridge-penalized logistic regression fit by Newton's method with step
// halving. Maximizes
//   sum_i [ s_i log mu(b.x_i) + (n_i - s_i) log(1 - mu(b.x_i)) ] - (l/2)|b|^2
// With lambda > 0 the Hessian is positive definite everywhere, so each step
// direction exists; halving keeps the ascent monotone in the rare overshoot.
// Stops when no coefficient moved more than `tol`; after `max_iter` rounds
// the current iterate is returned as-is. Throws EstimationFailure if the
// fit leaves the realm of finite numbers.
inline std::vector<double> quasi_mle(const std::vector<GlmObservation>& obs,
                                     double lambda, int dim,
                                     const std::vector<double>* warm_start = nullptr,
                                     int max_iter = 100, double tol = 1e-8) {
  if (dim < 1) throw ConstraintViolation("model dimension must be positive");
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ConstraintViolation("ridge strength must be finite and nonnegative");
  }
  for (const GlmObservation& o : obs) {
    if (o.x.size() != static_cast<std::size_t>(dim)) {
      throw ConstraintViolation("observation feature vector has wrong dimension");
    }
    if (o.trials < o.successes || o.successes < 0.0) {
      throw ConstraintViolation("observation needs 0 <= successes <= trials");
    }
  }
  std::vector<double> beta(static_cast<std::size_t>(dim), 0.0);
  if (warm_start != nullptr) {
    if (warm_start->size() != static_cast<std::size_t>(dim)) {
      throw ConstraintViolation("warm start has wrong dimension");
    }
    beta = *warm_start;
  }

  auto objective = [&](const std::vector<double>& b) {
    double val = -0.5 * lambda * dot(b, b);
    for (const GlmObservation& o : obs) {
      const double z = dot(b, o.x);
      // log mu(z) and log(1 - mu(z)) without cancellation:
      // log mu(z) = -log(1 + exp(-z)), log(1 - mu(z)) = -z - log(1 + exp(-z))
      const double softplus_negz =
          z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
      val += o.successes * (-softplus_negz);
      val += (o.trials - o.successes) * (-z - softplus_negz);
    }
    return val;
  };

  double cur = objective(beta);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<double> grad(static_cast<std::size_t>(dim), 0.0);
    SymMatrix hess(dim, lambda);
    for (int j = 0; j < dim; ++j) {
      grad[static_cast<std::size_t>(j)] = -lambda * beta[static_cast<std::size_t>(j)];
    }
    for (const GlmObservation& o : obs) {
      const double z = dot(beta, o.x);
      const double mu = logistic_link(z);
      const double resid = o.successes - o.trials * mu;
      for (int j = 0; j < dim; ++j) {
        grad[static_cast<std::size_t>(j)] += resid * o.x[static_cast<std::size_t>(j)];
      }
      hess.add_outer(o.x, o.trials * mu * (1.0 - mu));
    }
    std::vector<double> delta = Cholesky(hess).solve(grad);

    double step = 1.0;
    std::vector<double> trial(beta.size());
    double trial_val = cur;
    for (int h = 0; h < 30; ++h) {
      for (std::size_t j = 0; j < beta.size(); ++j) {
        trial[j] = beta[j] + step * delta[j];
      }
      trial_val = objective(trial);
      if (trial_val >= cur || !std::isfinite(trial_val)) break;
      step *= 0.5;
    }
    double max_move = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      max_move = std::max(max_move, std::abs(trial[j] - beta[j]));
    }
    beta = trial;
    cur = trial_val;
    for (double b : beta) {
      if (!std::isfinite(b)) {
        throw EstimationFailure("logistic fit produced non-finite coefficients");
      }
    }
    if (max_move <= tol) break;
  }
  return beta;
}

// Factor a design matrix, padding the diagonal once if roundoff spoiled
// positive definiteness. The designs are ridge + PSD sums, so in exact
// arithmetic this never triggers.
inline Cholesky factor_design(const SymMatrix& m, double ridge) {
  try {
    return Cholesky(m);
  } catch (const EstimationFailure&) {
    SymMatrix padded = m;
    padded.add_diag(ridge);
    return Cholesky(padded);
  }
}

// Tuning knobs for the contextual learner.
struct GlmConfig {
  double lambda = 1.0;          // ridge for the per-message acceptance models
  double lambda_abandon = 1.0;  // ridge for the continuation model
  std::uint64_t refit_dense_until = 1000;  // refit every user up to here...
  std::uint64_t refit_every_frac = 100;    // ...then every ceil(t / this) users
  bool force_per_step_refit = false;
  int max_iter = 100;
  double tol = 1e-8;
};

// Per-message acceptance model: logged binary outcomes from every user who
// viewed the message, the regularized design M = lambda I + sum x x^T over
// those users, and the latest coefficient fit.
struct GlmMessageModel {
  SymMatrix design;
  std::vector<GlmObservation> rows;
  std::vector<double> coef;  // zeros until the first fit
  std::uint64_t observers = 0;

  GlmMessageModel(int dim, double lambda)
      : design(dim, lambda), coef(static_cast<std::size_t>(dim), 0.0) {}
};

// Continuation model: each user who refused k >= 1 messages contributes one
// binomial row (the skips are the successes) and weight-k design mass.
struct GlmAbandonModel {
  SymMatrix design;
  std::vector<GlmObservation> rows;
  std::vector<double> coef;
  std::uint64_t events = 0;  // total refused views logged

  GlmAbandonModel(int dim, double lambda)
      : design(dim, lambda), coef(static_cast<std::size_t>(dim), 0.0) {}
};

// State for the contextual policies: one acceptance model per message plus
// the shared continuation model, with a refit schedule that is dense early
// and stretches out as data accumulates.
struct GlmLearnerState {
  int dim;
  GlmConfig config;
  std::vector<GlmMessageModel> messages;
  GlmAbandonModel abandonment;
  std::uint64_t users = 0;
  std::uint64_t next_refit = 1;
  bool last_fit_warning = false;

  GlmLearnerState(int n, int d, GlmConfig cfg = {})
      : dim(d), config(cfg), abandonment(d, cfg.lambda_abandon) {
    if (n < 1) throw ConstraintViolation("learner needs at least one message");
    if (d < 1) throw ConstraintViolation("feature dimension must be positive");
    messages.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      messages.emplace_back(d, cfg.lambda);
    }
  }

  int num_messages() const { return static_cast<int>(messages.size()); }

  // Log one served user: their features, which messages they saw, and how
  // the episode resolved.
  void observe(const std::vector<double>& x, const EpisodeOutcome& outcome) {
    if (x.size() != static_cast<std::size_t>(dim)) {
      throw ConstraintViolation("feature vector has wrong dimension");
    }
    for (int i : outcome.shown) {
      GlmMessageModel& m = messages[static_cast<std::size_t>(i)];
      const double y = (outcome.accepted == i) ? 1.0 : 0.0;
      m.rows.push_back(GlmObservation{x, y, 1.0});
      m.design.add_outer(x);
      ++m.observers;
    }
    const double refusals =
        static_cast<double>(outcome.skip_events) +
        ((outcome.terminal == Terminal::kAbandoned) ? 1.0 : 0.0);
    if (refusals > 0.0) {
      abandonment.rows.push_back(
          GlmObservation{x, static_cast<double>(outcome.skip_events), refusals});
      abandonment.design.add_outer(x, refusals);
      abandonment.events += static_cast<std::uint64_t>(refusals);
    }
    ++users;
  }

  // Refit on schedule: every user while users <= refit_dense_until, then
  // whenever the next milestone (last refit + ceil(t / refit_every_frac))
  // arrives. Coefficients warm-start from their previous values. A failed
  // fit keeps the old coefficients and raises last_fit_warning instead of
  // throwing. Returns whether a refit ran.
  bool maybe_refit() {
    const bool due = config.force_per_step_refit ||
                     users <= config.refit_dense_until || users >= next_refit;
    if (!due) return false;
    last_fit_warning = false;
    for (GlmMessageModel& m : messages) {
      if (m.rows.empty()) continue;
      try {
        m.coef = quasi_mle(m.rows, config.lambda, dim, &m.coef,
                           config.max_iter, config.tol);
      } catch (const EstimationFailure&) {
        last_fit_warning = true;
      }
    }
    if (!abandonment.rows.empty()) {
      try {
        abandonment.coef =
            quasi_mle(abandonment.rows, config.lambda_abandon, dim,
                      &abandonment.coef, config.max_iter, config.tol);
      } catch (const EstimationFailure&) {
        last_fit_warning = true;
      }
    }
    const std::uint64_t gap = std::max<std::uint64_t>(
        1, (users + config.refit_every_frac - 1) / config.refit_every_frac);
    next_refit = users + gap;
    return true;
  }
};

// Optimistic per-context view: link-transformed point prediction plus a
// confidence width rho(t) * sqrt(x^T M^{-1} x), rho(t) = sqrt(2 ln t),
// clamped into [0, 1].
inline UcbView glm_ucb_values(const GlmLearnerState& st,
                              const std::vector<double>& x, double t) {
  if (x.size() != static_cast<std::size_t>(st.dim)) {
    throw ConstraintViolation("feature vector has wrong dimension");
  }
  if (!(t >= 1.0)) throw ConstraintViolation("confidence bounds need t >= 1");
  const double rho = std::sqrt(2.0 * std::log(t));
  UcbView view;
  view.u_ucb.resize(st.messages.size());
  for (std::size_t i = 0; i < st.messages.size(); ++i) {
    const GlmMessageModel& m = st.messages[i];
    const double width = std::sqrt(
        factor_design(m.design, st.config.lambda).inverse_quadratic(x));
    view.u_ucb[i] = std::min(1.0, logistic_link(dot(m.coef, x)) + rho * width);
  }
  const double q_width = std::sqrt(
      factor_design(st.abandonment.design, st.config.lambda_abandon)
          .inverse_quadratic(x));
  view.q_ucb = std::min(
      1.0, logistic_link(dot(st.abandonment.coef, x)) + rho * q_width);
  return view;
}

// Plug-in per-context estimates for the greedy baselines. A message nobody
// has viewed yet has no model and resolves optimistically to 1; likewise
// the continuation probability before any refusal has been seen.
inline UcbView glm_point_values(const GlmLearnerState& st,
                                const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(st.dim)) {
    throw ConstraintViolation("feature vector has wrong dimension");
  }
  UcbView view;
  view.u_ucb.resize(st.messages.size());
  for (std::size_t i = 0; i < st.messages.size(); ++i) {
    const GlmMessageModel& m = st.messages[i];
    view.u_ucb[i] = m.observers == 0 ? 1.0 : logistic_link(dot(m.coef, x));
  }
  view.q_ucb = st.abandonment.events == 0
                   ? 1.0
                   : logistic_link(dot(st.abandonment.coef, x));
  return view;
}

// One contextual step: what was offered, how it went, and whether any model
// refit failed along the way (stale coefficients remain in use when it did).
struct GlmStepResult {
  Sequence offered;
  EpisodeOutcome outcome;
  bool estimation_warning = false;
};

// Contextual optimism: after an initiation pass that shows each message
// once (user k gets the singleton [k-1]), plan each user with the exact
// optimizer fed the optimistic per-context view.
template <typename Runner>
GlmStepResult algorithm2_step(GlmLearnerState& st, const MessageCatalog& catalog,
                              double cost, const std::vector<double>& x,
                              Runner&& run) {
  detail::check_same_size(catalog, st.messages.size(), "learner state");
  const std::uint64_t t = st.users + 1;
  GlmStepResult step;
  if (t <= static_cast<std::uint64_t>(catalog.size())) {
    step.offered = Sequence{{static_cast<int>(t) - 1}};
  } else {
    const UcbView view = glm_ucb_values(st, x, static_cast<double>(t));
    step.offered =
        optimal_sequence(catalog.revenues, view.u_ucb, 1.0 - view.q_ucb, cost);
  }
  step.outcome = run(step.offered);
  st.observe(x, step.outcome);
  st.maybe_refit();
  step.estimation_warning = st.last_fit_warning;
  return step;
}

namespace detail {

// Same explore-threshold rule as the flat benchmarks, over per-message
// observer counts.
inline int underexplored_message(const GlmLearnerState& st, std::uint64_t t,
                                 double gamma) {
  const double threshold = gamma * std::log(static_cast<double>(t));
  int pick = -1;
  for (std::size_t i = 0; i < st.messages.size(); ++i) {
    const std::uint64_t v = st.messages[i].observers;
    if (v == 0 || static_cast<double>(v) < threshold) {
      if (pick < 0 ||
          v < st.messages[static_cast<std::size_t>(pick)].observers) {
        pick = static_cast<int>(i);
      }
    }
  }
  return pick;
}

}  // namespace detail

// Contextual singleton-probe baseline: explore an under-viewed message
// alone, otherwise plan greedily on the fitted per-context estimates.
template <typename Runner>
GlmStepResult glm_benchmark1_step(GlmLearnerState& st,
                                  const MessageCatalog& catalog, double cost,
                                  double gamma, const std::vector<double>& x,
                                  Runner&& run) {
  detail::check_same_size(catalog, st.messages.size(), "learner state");
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw ConstraintViolation("exploration rate gamma must be positive");
  }
  const std::uint64_t t = st.users + 1;
  GlmStepResult step;
  const int probe = detail::underexplored_message(st, t, gamma);
  if (probe >= 0) {
    step.offered = Sequence{{probe}};
  } else {
    const UcbView view = glm_point_values(st, x);
    step.offered =
        optimal_sequence(catalog.revenues, view.u_ucb, 1.0 - view.q_ucb, cost);
  }
  step.outcome = run(step.offered);
  st.observe(x, step.outcome);
  st.maybe_refit();
  step.estimation_warning = st.last_fit_warning;
  return step;
}

// Contextual probe-in-front baseline: the under-viewed message leads and
// the greedy tail follows.
template <typename Runner>
GlmStepResult glm_benchmark2_step(GlmLearnerState& st,
                                  const MessageCatalog& catalog, double cost,
                                  double gamma, const std::vector<double>& x,
                                  Runner&& run) {
  detail::check_same_size(catalog, st.messages.size(), "learner state");
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw ConstraintViolation("exploration rate gamma must be positive");
  }
  const std::uint64_t t = st.users + 1;
  GlmStepResult step;
  const int probe = detail::underexplored_message(st, t, gamma);
  const UcbView view = glm_point_values(st, x);
  if (probe >= 0) {
    step.offered = optimal_sequence_with_fixed_head(
        catalog.revenues, view.u_ucb, 1.0 - view.q_ucb, cost, probe);
  } else {
    step.offered =
        optimal_sequence(catalog.revenues, view.u_ucb, 1.0 - view.q_ucb, cost);
  }
  step.outcome = run(step.offered);
  st.observe(x, step.outcome);
  st.maybe_refit();
  step.estimation_warning = st.last_fit_warning;
  return step;
}

}  // namespace scb
