#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "specrec/qlearn.hpp"
#include "specrec/stats.hpp"

using namespace specrec;

TEST_SUITE("qlearn") {

TEST_CASE("update arithmetic") {
  SUBCASE("alpha=1 fully replaces the entry") {
    QTable t(3);
    t.q[1][4] = 9.0;
    t.q[2][7] = 3.0;
    q_update(t, 1, 4, 2.0, 2, 1.0, 1.0);
    CHECK(t.q[1][4] == doctest::Approx(2.0 + 3.0));
  }
  SUBCASE("alpha=0 leaves the table unchanged") {
    QTable t(3);
    t.q[0][0] = 5.0;
    q_update(t, 0, 0, 100.0, 1, 0.0, 1.0);
    CHECK(t.q[0][0] == doctest::Approx(5.0));
  }
  SUBCASE("first update on a zero table with alpha=0.5 halves the reward") {
    QTable t(2);
    q_update(t, 0, 3, 2.0, 1, 0.5, 1.0);
    CHECK(t.q[0][3] == doctest::Approx(1.0));
  }
}

TEST_CASE("softmax exploration") {
  RandomStream rng(501);
  SUBCASE("uniform over equal entries") {
    QTable t(1);
    const long draws = 100000;
    std::vector<long> counts(QTable::kNumActions, 0);
    for (long i = 0; i < draws; ++i) ++counts[softmax_action(t, 0, 5.0, rng)];
    for (int a = 0; a < QTable::kNumActions; ++a) {
      const double f = counts[a] / double(draws);
      CHECK(std::abs(f - 0.1) < mc_tolerance(0.1, f, draws));
    }
  }
  SUBCASE("large temperature concentrates on the argmax") {
    QTable t(1);
    t.q[0][6] = 1.0;
    const long draws = 100000;
    long hits = 0;
    for (long i = 0; i < draws; ++i)
      if (softmax_action(t, 0, 200.0, rng) == 6) ++hits;
    CHECK(hits / double(draws) > 0.999);
  }
  SUBCASE("closed form for a (1,0,...,0) row at tau=1") {
    QTable t(1);
    t.q[0][0] = 1.0;
    const double target = std::exp(1.0) / (std::exp(1.0) + 9.0);
    const long draws = 100000;
    long hits = 0;
    for (long i = 0; i < draws; ++i)
      if (softmax_action(t, 0, 1.0, rng) == 0) ++hits;
    const double f = hits / double(draws);
    CHECK(std::abs(f - target) < mc_tolerance(target, f, draws));
  }
  SUBCASE("tau must be positive") {
    QTable t(1);
    CHECK_THROWS_AS(softmax_action(t, 0, 0.0, rng), std::invalid_argument);
  }
}

TEST_CASE("greedy extraction is deterministic with low-index tie break") {
  QTable t(1);
  t.q[0][3] = 2.0;
  t.q[0][5] = 2.0;
  CHECK(t.greedy_action(0) == 3);
  QTable zero(2);
  CHECK(zero.greedy_action(0) == 0);
  CHECK(QTable::action_value(zero.greedy_action(1)) == doctest::Approx(0.1));
}

TEST_CASE("training") {
  MdpModel model(10, 5, family_params({FamilyKind::Type2, 1.0}));
  QConfig cfg;
  cfg.steps = 300000;
  RandomStream rng(503);
  const auto result = train_q(model, cfg, rng);
  SUBCASE("policy entries stay on the grid") {
    REQUIRE(static_cast<int>(result.greedy.p_rec.size()) == model.num_states());
    for (double a : result.greedy.p_rec) {
      bool on_grid = false;
      for (int i = 1; i <= 10; ++i)
        if (std::abs(a - 0.1 * i) < 1e-12) on_grid = true;
      CHECK(on_grid);
    }
  }
  SUBCASE("the greedy grid policy is evaluable once clamped") {
    const double phi = policy_throughput(model, clamp_policy(result.greedy));
    CHECK(std::isfinite(phi));
    CHECK(phi > 0.0);
  }
  SUBCASE("q-table CSV export") {
    std::ostringstream os;
    write_qtable_csv(result.table, os);
    const auto text = os.str();
    CHECK(text.rfind("state,action_value,q\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') ==
          1 + model.num_states() * QTable::kNumActions);
  }
}

TEST_CASE("discounted updates stay inside the contraction bound") {
  MdpModel model(6, 3, family_params({FamilyKind::Type2, 2.0}));
  QConfig cfg;
  cfg.steps = 400000;
  cfg.discount = 0.9;
  RandomStream rng(509);
  const auto result = train_q(model, cfg, rng);
  const double bound =
      reward(model.num_states() - 1, model.channel.rate_b) / (1.0 - cfg.discount);
  for (int r = 0; r < model.num_states(); ++r)
    for (int a = 0; a < QTable::kNumActions; ++a)
      CHECK(std::abs(result.table.q[r][a]) <= bound * 1.01);
}

}  // TEST_SUITE
