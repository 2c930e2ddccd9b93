// Heterogeneous extension: access weights, CRN evaluation, the 2M-parameter
// solver and the tiny full-state oracle.
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "specrec/hetero.hpp"
#include "specrec/stats.hpp"

using namespace specrec;

namespace {

HeteroModel homogeneous_hetero(int m, int n, const ChannelParams& cp) {
  return HeteroModel(std::vector<ChannelParams>(m, cp), n);
}

}  // namespace

TEST_SUITE("hetero") {

TEST_CASE("access probabilities") {
  SUBCASE("equal weights give the uniform distribution") {
    HeteroWeightPolicy pol{{0.3, 0.3, 0.3}, {0.3, 0.3, 0.3}};
    HeteroState state{{1, 0, 1}};
    for (double v : access_probs(pol, state)) CHECK(v == doctest::Approx(1.0 / 3));
  }
  SUBCASE("hand-normalized two-channel case") {
    HeteroWeightPolicy pol{{0.8, 0.5}, {0.4, 0.2}};
    HeteroState state{{1, 0}};
    const auto probs = access_probs(pol, state);
    CHECK(probs[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("sums to one for random inputs") {
    RandomStream rng(601);
    for (int trial = 0; trial < 100; ++trial) {
      const int m = 1 + static_cast<int>(rng.below(8));
      HeteroWeightPolicy pol;
      HeteroState state;
      for (int i = 0; i < m; ++i) {
        pol.w_rec.push_back(0.01 + 0.98 * rng.next_double());
        pol.w_unrec.push_back(0.01 + 0.98 * rng.next_double());
        state.indicators.push_back(static_cast<std::uint8_t>(rng.below(2)));
      }
      const auto probs = access_probs(pol, state);
      CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) < 1e-12);
      for (double v : probs) CHECK(v >= 0.0);
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    HeteroWeightPolicy pol{{0.5}, {0.5}};
    HeteroState state{{1, 0}};
    CHECK_THROWS_AS(access_probs(pol, state), std::invalid_argument);
  }
}

TEST_CASE("evaluation") {
  const auto model = homogeneous_hetero(4, 3, family_params({FamilyKind::Type2, 5.0}));
  HeteroWeightPolicy pol{{0.6, 0.6, 0.6, 0.6}, {0.2, 0.2, 0.2, 0.2}};
  HeteroEvalConfig eval{2000, 3};
  SUBCASE("same base seed is bit-identical") {
    CHECK(evaluate_hetero(model, pol, eval, 77) == evaluate_hetero(model, pol, eval, 77));
    CHECK(evaluate_hetero(model, pol, eval, 77) != evaluate_hetero(model, pol, eval, 78));
  }
  SUBCASE("infeasible weights score -inf") {
    HeteroWeightPolicy bad = pol;
    bad.w_rec[1] = 1.2;
    CHECK(evaluate_hetero(model, bad, eval, 77) == kNegInf);
    HeteroWeightPolicy short_pol{{0.5}, {0.5}};
    CHECK(evaluate_hetero(model, short_pol, eval, 77) == kNegInf);
  }
  SUBCASE("plentiful users saturate pinned-idle channels") {
    const auto idle = homogeneous_hetero(3, 20, ChannelParams(0.999, 1e-12, 1.0));
    HeteroWeightPolicy uni{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
    const double tput = evaluate_hetero(idle, uni, HeteroEvalConfig{4000, 2}, 5);
    CHECK(tput > 0.98 * 3.0);
  }
}

TEST_CASE("homogeneous reduction to a state-count policy") {
  // With identical channels and constant weights (a, b), the recommended-set
  // mass at state R is Ra / (Ra + (M-R)b); the induced process matches the
  // state-count simulator driven by that policy.
  const int m = 6, n = 3;
  const auto cp = family_params({FamilyKind::Type2, 4.0});
  const double a = 0.6, b = 0.2;
  const auto model = homogeneous_hetero(m, n, cp);
  HeteroWeightPolicy weights{std::vector<double>(m, a), std::vector<double>(m, b)};

  Policy induced;
  for (int r = 0; r <= std::min(m, n); ++r) {
    const double mass = r * a / (r * a + (m - r) * b);
    induced.p_rec.push_back(std::clamp(mass, kActionFloor, 1.0 - kActionFloor));
  }

  const int reps = 24;
  const long horizon = 3000;
  std::vector<double> hetero_u, homog_u;
  for (int i = 0; i < reps; ++i) {
    hetero_u.push_back(
        evaluate_hetero(model, weights, HeteroEvalConfig{horizon, 1}, 1000 + i));
    SimConfig cfg;
    cfg.m_channels = m;
    cfg.n_users = n;
    cfg.horizon_t = horizon;
    cfg.scheme = PolicyDrivenScheme{induced};
    cfg.seed = 5000 + i;
    cfg.channels = homogeneous_channels(m, cp);
    homog_u.push_back(run_simulation(cfg).avg_throughput);
  }
  const double gap = mean(hetero_u) - mean(homog_u);
  const double se = std::sqrt(sample_se(hetero_u) * sample_se(hetero_u) +
                              sample_se(homog_u) * sample_se(homog_u));
  CHECK(std::abs(gap) < 3.0 * se);
}

TEST_CASE("solver") {
  SUBCASE("M=1 is degenerate: any policy scores the channel utilization") {
    const auto model = homogeneous_hetero(1, 2, ChannelParams(0.2, 0.2, 1.0));
    MrasConfig cfg{20, 0.2, 0.05, 6, 0.5, 0.3};
    HeteroEvalConfig eval{4000, 2};
    RandomStream rng(607);
    const auto [policy, trace] = mras_solve_hetero(model, cfg, eval, rng);
    const auto [phi, se] = evaluate_hetero_stats(model, policy, HeteroEvalConfig{20000, 6}, 11);
    CHECK(std::abs(phi - 0.5) < std::max(3.0 * se, 0.02));
    CHECK(policy.w_rec.size() == 1);
    CHECK(policy.w_unrec.size() == 1);
  }
  SUBCASE("decision variable count is 2M") {
    const auto model = homogeneous_hetero(10, 5, family_params({FamilyKind::Type2, 1.0}));
    MrasConfig cfg{12, 0.25, 0.4, 2, 0.5, 0.2};
    HeteroEvalConfig eval{400, 1};
    RandomStream rng(613);
    const auto [policy, trace] = mras_solve_hetero(model, cfg, eval, rng);
    CHECK(policy.w_rec.size() + policy.w_unrec.size() == 20);
  }
}

TEST_CASE("tiny full-state oracle") {
  SUBCASE("M > 4 is refused") {
    const auto model = homogeneous_hetero(5, 3, ChannelParams(0.3, 0.3, 1.0));
    MrasConfig cfg{10, 0.3, 0.1, 2, 0.5, 0.3};
    HeteroEvalConfig eval{200, 1};
    RandomStream rng(617);
    CHECK_THROWS_AS(tiny_full_hetero_oracle(model, cfg, eval, rng), std::invalid_argument);
  }
  SUBCASE("simplex projection") {
    const std::vector<double> raw{0.5, -2.0, 0.5};
    const auto probs = project_to_simplex(raw);
    CHECK(std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) < 1e-12);
    CHECK(probs[1] > 0.0);
    CHECK(probs[0] == doctest::Approx(probs[2]));
  }
  SUBCASE("M=3 mixed rates: dominance gap reported") {
    std::vector<ChannelParams> chans{family_params({FamilyKind::Type2, 4.0}, 0.5),
                                     family_params({FamilyKind::Type1, 4.0}, 2.0),
                                     family_params({FamilyKind::Type2, 4.0}, 6.0)};
    HeteroModel model(std::move(chans), 3);
    HeteroEvalConfig eval{2000, 2};
    MrasConfig cfg{40, 0.15, 0.02, 20, 0.5, 0.3};
    RandomStream rng_w(631);
    const auto [weights, wtrace] = mras_solve_hetero(model, cfg, eval, rng_w);
    RandomStream rng_f(633);
    const auto [full, ftrace] = tiny_full_hetero_oracle(model, cfg, eval, rng_f);
    HeteroEvalConfig score{15000, 8};
    const auto [phi_w, se_w] = evaluate_hetero_stats(model, weights, score, 77);
    const auto [phi_f, se_f] = evaluate_full_policy_stats(model, full, score, 77);
    const double se = std::sqrt(se_w * se_w + se_f * se_f);
    MESSAGE("full-state oracle ", phi_f, " vs heuristic weights ", phi_w, " (gap ",
            phi_f - phi_w, ", 3se ", 3.0 * se, ")");
    CHECK(phi_f >= phi_w - 3.0 * se);
  }
  SUBCASE("M=2 full oracle dominates the heuristic weights") {
    const auto model = homogeneous_hetero(2, 2, family_params({FamilyKind::Type2, 8.0}));
    HeteroEvalConfig eval{2500, 2};
    MrasConfig cfg{40, 0.15, 0.02, 25, 0.5, 0.4};
    RandomStream rng_w(619);
    const auto [weights, wtrace] = mras_solve_hetero(model, cfg, eval, rng_w);
    RandomStream rng_f(621);
    const auto [full, ftrace] = tiny_full_hetero_oracle(model, cfg, eval, rng_f);
    HeteroEvalConfig score{20000, 8};
    const auto [phi_w, se_w] = evaluate_hetero_stats(model, weights, score, 99);
    const auto [phi_f, se_f] = evaluate_full_policy_stats(model, full, score, 99);
    const double se = std::sqrt(se_w * se_w + se_f * se_f);
    CHECK(phi_f >= phi_w - 3.0 * se);
  }
}

TEST_CASE("hetero policy JSON round trip") {
  const auto model = homogeneous_hetero(3, 4, ChannelParams(0.25, 0.5, 2.0));
  HeteroWeightPolicy pol{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
  const auto j = hetero_policy_to_json(model, pol);
  const auto [model2, pol2] = hetero_policy_from_json(j);
  CHECK(model2.m() == 3);
  CHECK(model2.n_users == 4);
  CHECK(pol2.w_rec == pol.w_rec);
  CHECK(pol2.w_unrec == pol.w_unrec);
}

}  // TEST_SUITE
