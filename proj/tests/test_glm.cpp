#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "scb/glm.hpp"
#include "scb/learner.hpp"
#include "scb/rng.hpp"
#include "scb/simulate.hpp"

using Catch::Approx;
using scb::EpisodeOutcome;
using scb::GlmConfig;
using scb::GlmLearnerState;
using scb::GlmObservation;
using scb::MessageCatalog;
using scb::Sequence;
using scb::Terminal;

namespace {

std::vector<GlmObservation> synth_logistic(scb::RngStream& rng, int n,
                                           const std::vector<double>& beta) {
  std::vector<GlmObservation> obs;
  obs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> x{1.0};
    for (std::size_t k = 1; k < beta.size(); ++k) x.push_back(rng.uniform(-1.0, 1.0));
    const double mu = scb::logistic_link(scb::dot(beta, x));
    obs.push_back(GlmObservation{x, rng.bernoulli(mu) ? 1.0 : 0.0, 1.0});
  }
  return obs;
}

}  // namespace

TEST_CASE("logistic fit recovers planted coefficients") {
  const std::vector<double> beta{0.4, -1.2, 0.8};
  scb::RngStream rng(9001);
  const auto obs = synth_logistic(rng, 20000, beta);
  const auto fit = scb::quasi_mle(obs, 1.0, 3);
  for (std::size_t k = 0; k < beta.size(); ++k) {
    REQUIRE(fit[k] == Approx(beta[k]).margin(0.1));
  }
}

TEST_CASE("logistic fit zeroes the penalized gradient") {
  const std::vector<double> beta{-0.5, 0.9};
  scb::RngStream rng(9002);
  const auto obs = synth_logistic(rng, 3000, beta);
  const double lambda = 2.5;
  const auto fit = scb::quasi_mle(obs, lambda, 2);
  std::vector<double> grad(2, 0.0);
  for (int k = 0; k < 2; ++k) grad[static_cast<std::size_t>(k)] = -lambda * fit[static_cast<std::size_t>(k)];
  for (const auto& o : obs) {
    const double resid = o.successes - o.trials * scb::logistic_link(scb::dot(fit, o.x));
    for (std::size_t k = 0; k < 2; ++k) grad[k] += resid * o.x[k];
  }
  CHECK(std::abs(grad[0]) < 1e-5);
  CHECK(std::abs(grad[1]) < 1e-5);
}

TEST_CASE("aggregated binomial rows fit like their expanded form") {
  scb::RngStream rng(9003);
  std::vector<GlmObservation> grouped;
  std::vector<GlmObservation> expanded;
  for (int g = 0; g < 40; ++g) {
    std::vector<double> x{1.0, rng.uniform(-1.0, 1.0)};
    const int trials = 1 + static_cast<int>(rng.next_u64() % 20);
    int successes = 0;
    for (int t = 0; t < trials; ++t) {
      const bool y = rng.bernoulli(0.4);
      successes += y ? 1 : 0;
      expanded.push_back(GlmObservation{x, y ? 1.0 : 0.0, 1.0});
    }
    grouped.push_back(GlmObservation{x, static_cast<double>(successes),
                                     static_cast<double>(trials)});
  }
  const auto a = scb::quasi_mle(grouped, 1.0, 2);
  const auto b = scb::quasi_mle(expanded, 1.0, 2);
  CHECK(a[0] == Approx(b[0]).margin(1e-6));
  CHECK(a[1] == Approx(b[1]).margin(1e-6));
}

TEST_CASE("ridge keeps separable data finite") {
  // perfectly separated outcomes: unpenalized MLE runs away to infinity
  std::vector<GlmObservation> obs;
  for (int i = 0; i < 50; ++i) {
    obs.push_back(GlmObservation{{1.0, 1.0}, 1.0, 1.0});
    obs.push_back(GlmObservation{{1.0, -1.0}, 0.0, 1.0});
  }
  const auto fit = scb::quasi_mle(obs, 1.0, 2);
  CHECK(std::isfinite(fit[0]));
  CHECK(std::isfinite(fit[1]));
  CHECK(fit[1] > 0.0);  // direction is still learned
}

TEST_CASE("logistic fit validates its inputs") {
  CHECK_THROWS_AS(scb::quasi_mle({GlmObservation{{1.0}, 2.0, 1.0}}, 1.0, 1),
                  scb::ConstraintViolation);  // successes > trials
  CHECK_THROWS_AS(scb::quasi_mle({GlmObservation{{1.0, 2.0}, 1.0, 1.0}}, 1.0, 1),
                  scb::ConstraintViolation);  // wrong dimension
  CHECK_THROWS_AS(scb::quasi_mle({}, -1.0, 1), scb::ConstraintViolation);
  CHECK_THROWS_AS(scb::quasi_mle({}, 1.0, 0), scb::ConstraintViolation);
  const std::vector<double> bad_start{1.0, 2.0};
  CHECK_THROWS_AS(scb::quasi_mle({}, 1.0, 1, &bad_start),
                  scb::ConstraintViolation);
}

TEST_CASE("design factorization pads a spoiled diagonal once") {
  scb::SymMatrix rank1(2);
  rank1.add_outer({1.0, 1.0});
  CHECK_NOTHROW(scb::factor_design(rank1, 1e-6));
  CHECK_THROWS_AS(scb::factor_design(rank1, 0.0), scb::EstimationFailure);
}

TEST_CASE("observation logging splits outcomes across the right models") {
  GlmLearnerState st(3, 2);
  const std::vector<double> x{1.0, 0.5};

  EpisodeOutcome accepted;
  accepted.shown = {2, 0};
  accepted.terminal = Terminal::kAccepted;
  accepted.accepted = 0;
  accepted.skip_events = 1;
  st.observe(x, accepted);

  EpisodeOutcome abandoned;
  abandoned.shown = {1, 2};
  abandoned.terminal = Terminal::kAbandoned;
  abandoned.skip_events = 1;
  st.observe(x, abandoned);

  EpisodeOutcome exhausted;
  exhausted.shown = {0};
  exhausted.terminal = Terminal::kExhausted;
  exhausted.skip_events = 1;
  st.observe(x, exhausted);

  CHECK(st.users == 3);
  CHECK(st.messages[0].observers == 2);
  CHECK(st.messages[1].observers == 1);
  CHECK(st.messages[2].observers == 2);
  // message 0: one acceptance, one refusal
  REQUIRE(st.messages[0].rows.size() == 2);
  CHECK(st.messages[0].rows[0].successes == 1.0);
  CHECK(st.messages[0].rows[1].successes == 0.0);
  // design = lambda I + sum x x^T over observers
  CHECK(st.messages[0].design.at(0, 0) == Approx(1.0 + 2.0 * 1.0));
  CHECK(st.messages[0].design.at(0, 1) == Approx(2.0 * 0.5));
  CHECK(st.messages[0].design.at(1, 1) == Approx(1.0 + 2.0 * 0.25));

  // continuation rows: skip counts out of refusal trials
  REQUIRE(st.abandonment.rows.size() == 3);
  CHECK(st.abandonment.rows[0].successes == 1.0);  // accepted episode: skip, no quit
  CHECK(st.abandonment.rows[0].trials == 1.0);
  CHECK(st.abandonment.rows[1].successes == 1.0);  // abandoned: one skip, one quit
  CHECK(st.abandonment.rows[1].trials == 2.0);
  CHECK(st.abandonment.rows[2].successes == 1.0);  // exhausted: skip only
  CHECK(st.abandonment.rows[2].trials == 1.0);
  CHECK(st.abandonment.events == 4);
  // weighted design: lambda + sum of trials * x x^T
  CHECK(st.abandonment.design.at(0, 0) == Approx(1.0 + 4.0));

  // an instant acceptance contributes nothing to the continuation model
  EpisodeOutcome instant;
  instant.shown = {1};
  instant.terminal = Terminal::kAccepted;
  instant.accepted = 1;
  st.observe(x, instant);
  CHECK(st.abandonment.rows.size() == 3);
  CHECK(st.abandonment.events == 4);

  CHECK_THROWS_AS(st.observe({1.0}, instant), scb::ConstraintViolation);
}

TEST_CASE("refits run densely early and stretch out later") {
  GlmConfig cfg;
  cfg.refit_dense_until = 3;
  cfg.refit_every_frac = 2;
  GlmLearnerState st(1, 1, cfg);
  EpisodeOutcome o;
  o.shown = {0};
  o.terminal = Terminal::kExhausted;
  o.skip_events = 1;

  std::vector<std::uint64_t> refit_at;
  for (std::uint64_t user = 1; user <= 10; ++user) {
    st.observe({1.0}, o);
    if (st.maybe_refit()) refit_at.push_back(user);
  }
  // dense through 3, then milestones at users + ceil(users/2): 5, 8, then 12
  CHECK(refit_at == std::vector<std::uint64_t>{1, 2, 3, 5, 8});

  GlmConfig every;
  every.force_per_step_refit = true;
  GlmLearnerState st2(1, 1, every);
  int refits = 0;
  for (int user = 0; user < 5; ++user) {
    st2.observe({1.0}, o);
    if (st2.maybe_refit()) ++refits;
  }
  CHECK(refits == 5);
}

TEST_CASE("fresh-state confidence bound is checkable by hand") {
  // no data: coefficients 0, design = identity, so the bound at features x is
  // min(1, 1/2 + sqrt(2 ln t) * |x|); with |x|^2 = 0.02 and t = e it is 0.7
  GlmLearnerState st(2, 2);
  const std::vector<double> x{0.1, 0.1};
  const auto view = scb::glm_ucb_values(st, x, std::exp(1.0));
  CHECK(view.u_ucb[0] == Approx(0.7).margin(1e-12));
  CHECK(view.u_ucb[1] == Approx(0.7).margin(1e-12));
  CHECK(view.q_ucb == Approx(0.7).margin(1e-12));

  CHECK_THROWS_AS(scb::glm_ucb_values(st, x, 0.5), scb::ConstraintViolation);
  CHECK_THROWS_AS(scb::glm_ucb_values(st, {1.0}, 2.0), scb::ConstraintViolation);
}

TEST_CASE("confidence widths shrink as observations accumulate") {
  GlmLearnerState st(1, 2);
  const std::vector<double> x{1.0, 0.3};
  const double before = scb::glm_ucb_values(st, x, 10.0).u_ucb[0];
  EpisodeOutcome o;
  o.shown = {0};
  o.terminal = Terminal::kExhausted;
  o.skip_events = 1;
  for (int k = 0; k < 200; ++k) st.observe(x, o);
  st.config.force_per_step_refit = true;
  st.maybe_refit();
  const double after = scb::glm_ucb_values(st, x, 10.0).u_ucb[0];
  // after 200 straight refusals at the same x the bound must have collapsed
  CHECK(after < before);
  CHECK(after < 0.35);
}

TEST_CASE("intercept-only contextual learner mirrors the flat counters") {
  // with x = (1) the per-message fits reduce to empirical frequencies and the
  // continuation fit to the skip ratio (up to the vanishing ridge)
  const MessageCatalog catalog{{1.0, 1.0, 1.0}};
  const scb::EnvironmentParams env{{0.3, 0.2, 0.4}, 0.15, 0.5};
  const Sequence seq{{0, 1, 2}};
  scb::RngStream rng(9004);

  scb::LearnerState flat(3);
  GlmConfig cfg;
  cfg.lambda = 1e-8;
  cfg.lambda_abandon = 1e-8;
  GlmLearnerState glm(3, 1, cfg);
  for (int e = 0; e < 2000; ++e) {
    const auto out = scb::run_episode(catalog, env, seq, rng);
    flat.apply(out);
    glm.observe({1.0}, out);
  }
  glm.config.force_per_step_refit = true;
  REQUIRE(glm.maybe_refit());
  REQUIRE(!glm.last_fit_warning);

  const auto est = scb::point_estimates(flat);
  const auto view = scb::glm_point_values(glm, {1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(flat.views[i] > 100);
    REQUIRE(view.u_ucb[i] == Approx(*est.u_hat[i]).margin(1e-4));
  }
  REQUIRE(view.q_ucb == Approx(*est.q_hat).margin(1e-4));
}

TEST_CASE("contextual optimist initiates with one singleton per message") {
  const MessageCatalog catalog{{1.0, 2.0, 3.0}};
  GlmLearnerState st(3, 2);
  scb::RngStream rng(9005);
  const std::vector<double> x{1.0, 0.4};
  auto refuse_all = [&](const Sequence& s) {
    EpisodeOutcome o;
    o.shown = s.order;
    o.terminal = Terminal::kExhausted;
    o.skip_events = static_cast<int>(s.order.size());
    return o;
  };
  for (int k = 0; k < 3; ++k) {
    const auto step = scb::algorithm2_step(st, catalog, 0.5, x, refuse_all);
    REQUIRE(step.offered.order == std::vector<int>{k});
  }
  // from user 4 on, the offer is the exact optimizer fed the optimistic view
  const auto expect_view = scb::glm_ucb_values(st, x, 4.0);
  const auto expect = scb::optimal_sequence(catalog.revenues, expect_view.u_ucb,
                                            1.0 - expect_view.q_ucb, 0.5);
  const auto step = scb::algorithm2_step(st, catalog, 0.5, x, refuse_all);
  REQUIRE(step.offered.order == expect.order);
  CHECK(st.users == 4);
}

TEST_CASE("contextual baselines probe under-viewed messages") {
  const MessageCatalog catalog{{1.0, 2.0}};
  const std::vector<double> x{1.0, -0.2};
  auto refuse_all = [&](const Sequence& s) {
    EpisodeOutcome o;
    o.shown = s.order;
    o.terminal = Terminal::kExhausted;
    o.skip_events = static_cast<int>(s.order.size());
    return o;
  };

  SECTION("singleton probes, then greedy") {
    GlmLearnerState st(2, 2);
    auto s1 = scb::glm_benchmark1_step(st, catalog, 0.5, 0.1, x, refuse_all);
    CHECK(s1.offered.order == std::vector<int>{0});
    auto s2 = scb::glm_benchmark1_step(st, catalog, 0.5, 0.1, x, refuse_all);
    CHECK(s2.offered.order == std::vector<int>{1});
    // both seen once; gamma ln 3 = 0.11 < 1, so exploit at point values
    const auto view = scb::glm_point_values(st, x);
    const auto expect = scb::optimal_sequence(catalog.revenues, view.u_ucb,
                                              1.0 - view.q_ucb, 0.5);
    auto s3 = scb::glm_benchmark1_step(st, catalog, 0.5, 0.1, x, refuse_all);
    CHECK(s3.offered.order == expect.order);
  }
  SECTION("probe leads, greedy tail follows") {
    GlmLearnerState st(2, 2);
    const auto view = scb::glm_point_values(st, x);  // all-optimistic
    const auto expect = scb::optimal_sequence_with_fixed_head(
        catalog.revenues, view.u_ucb, 1.0 - view.q_ucb, 0.5, 0);
    auto s1 = scb::glm_benchmark2_step(st, catalog, 0.5, 0.1, x, refuse_all);
    REQUIRE(!s1.offered.empty());
    CHECK(s1.offered.order.front() == 0);
    CHECK(s1.offered.order == expect.order);
  }
  SECTION("exploration rate must be positive") {
    GlmLearnerState st(2, 2);
    CHECK_THROWS_AS(scb::glm_benchmark1_step(st, catalog, 0.5, 0.0, x, refuse_all),
                    scb::ConstraintViolation);
    CHECK_THROWS_AS(scb::glm_benchmark2_step(st, catalog, 0.5, -2.0, x, refuse_all),
                    scb::ConstraintViolation);
  }
}

TEST_CASE("driving the contextual learner with real traffic recovers the model") {
  const scb::FeatureBox box{{{0.0, 1.0}}};
  const scb::ContextualEnvironment env{
      {0.8, 0.5}, {{-0.4, 1.2}, {-1.0, -0.5}}, 0.5, box};
  const MessageCatalog catalog{{1.0, 1.5}};
  scb::RngStream rng(9006);
  GlmConfig cfg;
  cfg.refit_dense_until = 50;  // keep the test quick
  GlmLearnerState st(2, 2, cfg);
  const Sequence both{{0, 1}};
  for (int e = 0; e < 6000; ++e) {
    const auto x = scb::sample_features(box, rng);
    st.observe(x, scb::run_contextual_episode(catalog, env, x, both, rng));
    st.maybe_refit();
  }
  st.config.force_per_step_refit = true;
  st.maybe_refit();

  // predictions track the truth across the feature range
  for (double z : {0.1, 0.5, 0.9}) {
    const std::vector<double> x{1.0, z};
    const auto view = scb::glm_point_values(st, x);
    CHECK(view.u_ucb[0] == Approx(env.valuation(0, x)).margin(0.05));
    CHECK(view.u_ucb[1] == Approx(env.valuation(1, x)).margin(0.05));
    CHECK(view.q_ucb == Approx(env.continue_prob(x)).margin(0.05));
  }
}
