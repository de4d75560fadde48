#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "scb/oracle.hpp"
#include "scb/payoff.hpp"
#include "scb/rng.hpp"
#include "support/test_oracles.hpp"

using Catch::Approx;
using scb::EnvironmentParams;
using scb::MessageCatalog;
using scb::Sequence;

TEST_CASE("enumeration covers a tiny catalog by hand") {
  // two messages, all seven candidates checkable on paper
  const MessageCatalog catalog{{1.0, 1.0}};
  const EnvironmentParams env{{0.5, 0.5}, 0.1, 0.5};
  const auto best = scb::enumerate_optimal(catalog, env);
  // [0,1] and [1,0] tie at 0.68875 and beat [0], [1] (0.475) and empty (0);
  // the tie resolves to the lexicographically smaller order
  CHECK(best.sequence.order == std::vector<int>{0, 1});
  CHECK(best.payoff == Approx(0.68875).margin(1e-15));
}

TEST_CASE("enumeration prefers sending nothing when every message loses money") {
  const MessageCatalog catalog{{0.0, 0.01}};
  const EnvironmentParams env{{0.3, 0.1}, 0.5, 10.0};
  const auto best = scb::enumerate_optimal(catalog, env);
  CHECK(best.sequence.empty());
  CHECK(best.payoff == 0.0);
}

TEST_CASE("enumeration is a true argmax over every ordered subset") {
  scb::RngStream rng(8001);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);
    const auto inst = scbtest::random_instance(rng, n, {0.05, 0.3}, {0.2, 1.5});
    const MessageCatalog catalog{inst.revenues};
    const EnvironmentParams env{inst.valuations, inst.p, inst.c};
    const auto best = scb::enumerate_optimal(catalog, env);

    // re-enumerate here, independently, the dumbest possible way
    std::vector<int> perm;
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    double max_seen = 0.0;  // empty sequence
    std::function<void()> walk = [&]() {
      for (int i = 0; i < n; ++i) {
        if (used[static_cast<std::size_t>(i)]) continue;
        used[static_cast<std::size_t>(i)] = 1;
        perm.push_back(i);
        max_seen = std::max(
            max_seen,
            scb::expected_payoff(catalog, env, Sequence{perm}).expected_payoff);
        walk();
        perm.pop_back();
        used[static_cast<std::size_t>(i)] = 0;
      }
    };
    walk();
    REQUIRE(best.payoff == Approx(max_seen).margin(0.0));
    // and the reported sequence actually attains the reported payoff
    REQUIRE(scb::expected_payoff(catalog, env, best.sequence).expected_payoff ==
            Approx(best.payoff).margin(0.0));
  }
}

TEST_CASE("size guard refuses oversized catalogs") {
  std::vector<double> r(9, 1.0);
  std::vector<double> u(9, 0.5);
  const MessageCatalog catalog{r};
  const EnvironmentParams env{u, 0.1, 0.5};
  CHECK_THROWS_AS(scb::enumerate_optimal(catalog, env), scb::SizeGuardError);
  CHECK_NOTHROW(scb::enumerate_optimal(catalog, env, 9));  // explicit opt-in
}

TEST_CASE("general patience enumeration can disagree with the score ordering") {
  // Under geometric patience the score rule is exact. Under a cliff-shaped
  // survival curve (certain death after one view) only the single best
  // first message matters, which enumeration must discover on its own.
  const MessageCatalog catalog{{1.0, 10.0}};
  const std::vector<double> u{0.9, 0.2};
  const std::vector<double> survival{1.0, 0.0, 0.0};
  const auto best = scb::enumerate_optimal_general_w(catalog, u, survival, 0.0);
  // position 1 is the only one ever seen: value is u_i * r_i, so message 1
  // (10 * 0.2 = 2.0) beats message 0 (0.9); trailing messages change nothing
  // and the tie-break keeps the shortest-lexicographic winner
  CHECK(best.payoff == Approx(2.0).margin(1e-12));
  REQUIRE(!best.sequence.empty());
  CHECK(best.sequence.order.front() == 1);
}

TEST_CASE("general patience enumeration matches the geometric one") {
  scb::RngStream rng(8002);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);
    const auto inst = scbtest::random_instance(rng, n, {0.1, 0.4}, {0.3, 1.0});
    const MessageCatalog catalog{inst.revenues};
    const EnvironmentParams env{inst.valuations, inst.p, inst.c};
    const auto survival = scbtest::geometric_survival(1.0 - inst.p, n + 1);
    const auto geo = scb::enumerate_optimal(catalog, env);
    const auto gen = scb::enumerate_optimal_general_w(catalog, inst.valuations,
                                                      survival, inst.c);
    REQUIRE(gen.payoff == Approx(geo.payoff).margin(1e-12));
    REQUIRE(gen.sequence.order == geo.sequence.order);
  }
}

TEST_CASE("general patience enumeration validates the survival curve") {
  const MessageCatalog catalog{{1.0, 1.0}};
  const std::vector<double> u{0.5, 0.5};
  CHECK_THROWS_AS(
      scb::enumerate_optimal_general_w(catalog, u, {1.0, 0.5}, 0.5),
      scb::ConstraintViolation);  // needs n + 1 entries
}
