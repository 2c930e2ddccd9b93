// Chain construction, stationary analysis, policy evaluation and the
// dynamic-programming oracles.
#include <doctest.h>

#include <cmath>
#include <vector>

#include "specrec/mdp.hpp"
#include "specrec/stats.hpp"

using namespace specrec;

TEST_SUITE("mdp-policy") {

TEST_CASE("two-state chain from the single-user hand formulas") {
  MdpModel model(1, 1, ChannelParams(0.4, 0.3, 1.0));
  Policy pol{{0.5, 0.5}};
  const double pi = stationary_idle_prob(model.channel);
  for (const auto formula : {TransitionFormula::Composition, TransitionFormula::Exact}) {
    const auto chain = build_chain(model, pol, formula);
    REQUIRE(chain.size() == 2);
    CHECK(chain.rows[0][1] == doctest::Approx(0.5 * pi).epsilon(1e-12));
    CHECK(chain.rows[1][1] ==
          doctest::Approx(0.5 * (1.0 - model.channel.q)).epsilon(1e-12));
    for (const auto& row : chain.rows)
      CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("interior policies yield irreducible chains") {
  RandomStream rng(211);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(12));
    const int n = 1 + static_cast<int>(rng.below(6));
    MdpModel model(m, n, ChannelParams(0.05 + 0.9 * rng.next_double(),
                                       0.05 + 0.9 * rng.next_double(), 1.0));
    Policy pol;
    for (int r = 0; r < model.num_states(); ++r)
      pol.p_rec.push_back(0.02 + 0.96 * rng.next_double());
    CHECK(is_irreducible(build_chain(model, pol)));
  }
}

TEST_CASE("build_chain rejects malformed policies") {
  MdpModel model(4, 2, ChannelParams(0.5, 0.5, 1.0));
  CHECK_THROWS_AS(build_chain(model, Policy{{0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(build_chain(model, Policy{{0.5, 1.2, 0.5}}), std::invalid_argument);
}

TEST_CASE("stationary distribution") {
  SUBCASE("closed form for a 2-state chain") {
    const double a = 0.3, b = 0.12;
    TransitionMatrix chain{{{1 - a, a}, {b, 1 - b}}};
    const auto pi = stationary_distribution(chain);
    CHECK(pi[0] == doctest::Approx(b / (a + b)).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(a / (a + b)).epsilon(1e-12));
  }
  SUBCASE("reducible chains are rejected with the offending states named") {
    TransitionMatrix ident{{{1.0, 0.0}, {0.0, 1.0}}};
    CHECK_THROWS_WITH_AS(stationary_distribution(ident),
                         doctest::Contains("states not communicating"), std::runtime_error);
  }
  SUBCASE("power iteration agrees with the direct solve") {
    RandomStream rng(223);
    for (int trial = 0; trial < 10; ++trial) {
      MdpModel model(8, 4, ChannelParams(0.05 + 0.9 * rng.next_double(),
                                         0.05 + 0.9 * rng.next_double(), 1.0));
      Policy pol;
      for (int r = 0; r < model.num_states(); ++r)
        pol.p_rec.push_back(0.05 + 0.9 * rng.next_double());
      const auto chain = build_chain(model, pol);
      const auto direct = stationary_distribution(chain);
      const auto power = stationary_distribution_power(chain);
      for (int s = 0; s < chain.size(); ++s)
        CHECK(direct[s] == doctest::Approx(power[s]).epsilon(1e-8));
    }
  }
  SUBCASE("residual bound holds on evaluated policies") {
    RandomStream rng(227);
    for (int trial = 0; trial < 20; ++trial) {
      MdpModel model(10, 5, family_params({FamilyKind::Type2, 1.0 + 9.0 * rng.next_double()}));
      Policy pol;
      for (int r = 0; r < model.num_states(); ++r)
        pol.p_rec.push_back(0.05 + 0.9 * rng.next_double());
      const auto chain = build_chain(model, pol);
      const auto pi = stationary_distribution(chain);
      double residual = 0.0;
      for (int j = 0; j < chain.size(); ++j) {
        double col = 0.0;
        for (int i = 0; i < chain.size(); ++i) col += pi[i] * chain.rows[i][j];
        residual = std::max(residual, std::abs(col - pi[j]));
      }
      CHECK(residual <= 1e-10);
    }
  }
}

TEST_CASE("policy throughput") {
  MdpModel model(10, 5, family_params({FamilyKind::Type2, 1.0}));
  SUBCASE("infeasible policies collapse to the -inf sentinel") {
    Policy bad{{0.5, 0.5, 0.5, 0.5, 0.5, 1.2}};
    CHECK(policy_throughput(model, bad) == kNegInf);
    Policy wrong_size{{0.5, 0.5}};
    CHECK(policy_throughput(model, wrong_size) == kNegInf);
  }
  SUBCASE("matches a long chain trajectory") {
    const auto pol = heuristic_policy(model);
    const double phi = policy_throughput(model, pol);
    RandomStream rng(229);
    const long steps = 1000000;
    const auto chain = build_chain(model, pol);
    int state = 0;
    std::vector<double> rewards;
    rewards.reserve(steps);
    for (long t = 0; t < steps; ++t) {
      state = rng.categorical(chain.rows[state]);
      rewards.push_back(reward(state, model.channel.rate_b));
    }
    const double avg = mean(rewards);
    const double se = batch_mean_se(rewards);
    CHECK(std::abs(avg - phi) < 3.0 * se);
  }
}

TEST_CASE("heuristic branching probability") {
  CHECK(heuristic_branching(2, 5) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(heuristic_branching(0, 5) == doctest::Approx(1e-6));
  CHECK(heuristic_branching(5, 5) == doctest::Approx(1.0 - 1e-6));
}

TEST_CASE("relative value iteration") {
  MdpModel model(6, 3, family_params({FamilyKind::Type2, 2.0}));
  SUBCASE("single-action grid reduces to policy evaluation") {
    const double grid[] = {0.37};
    const auto res = relative_value_iteration(model, grid, 1e-11);
    Policy constant{{0.37, 0.37, 0.37, 0.37}};
    CHECK(res.gain == doctest::Approx(policy_throughput(model, constant)).epsilon(1e-10));
  }
  SUBCASE("refining the grid never decreases the gain") {
    std::vector<double> coarse{0.3, 0.7};
    std::vector<double> mid{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> fine;
    for (int i = 1; i <= 19; ++i) fine.push_back(0.05 * i);
    const double g1 = relative_value_iteration(model, coarse).gain;
    const double g2 = relative_value_iteration(model, mid).gain;
    const double g3 = relative_value_iteration(model, fine).gain;
    CHECK(g2 >= g1 - 1e-12);
    CHECK(g3 >= g2 - 1e-12);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(relative_value_iteration(model, std::vector<double>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(relative_value_iteration(model, std::vector<double>{1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("discounted value iteration") {
  SUBCASE("horizon one returns the terminal payoff") {
    MdpModel model(4, 3, ChannelParams(0.4, 0.3, 2.0));
    std::vector<double> grid{0.2, 0.5, 0.8};
    const auto res = discounted_value_iteration(model, 0.95, grid, 1);
    REQUIRE(res.values.size() == 2);
    for (int s = 0; s < model.num_states(); ++s)
      CHECK(res.values[1][s] == doctest::Approx(s * 2.0));
  }
  SUBCASE("infinite-M values nondecreasing in R at every stage") {
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
    for (double q : {0.2, 0.6}) {
      const int n = 4;
      const auto res = discounted_value_iteration(infinite_m_kernel(n, 0.3, q), n + 1, 1.0,
                                                  0.95, grid, 10);
      for (const auto& stage : res.values)
        for (int s = 0; s + 1 <= n; ++s) CHECK(stage[s + 1] >= stage[s] - 1e-10);
    }
  }
  SUBCASE("infinite-M greedy policy is monotone in R") {
    std::vector<double> grid;
    for (int i = 1; i <= 99; ++i) grid.push_back(0.01 * i);
    for (double q : {0.3, 0.6}) {
      const int n = 3;
      const auto res =
          discounted_value_iteration(infinite_m_kernel(n, 0.4, q), n + 1, 1.0, 0.95, grid, 8);
      for (const auto& stage : res.greedy)
        for (int s = 0; s + 1 <= n; ++s) CHECK(stage[s + 1] >= stage[s] - 1e-12);
    }
  }
}

TEST_CASE("policy JSON round trip") {
  MdpModel model(10, 5, family_params({FamilyKind::Type1, 2.0}));
  const auto pol = heuristic_policy(model);
  const auto j = policy_to_json(model, pol);
  const auto [model2, pol2] = policy_from_json(j);
  CHECK(model2.m_channels == model.m_channels);
  CHECK(model2.n_users == model.n_users);
  CHECK(model2.channel.p == doctest::Approx(model.channel.p));
  CHECK(pol2.p_rec == pol.p_rec);

  auto bad = j;
  bad["p_rec"] = std::vector<double>{0.5};
  CHECK_THROWS_AS(policy_from_json(bad), std::invalid_argument);
}

}  // TEST_SUITE
