// Heterogeneous-channel extension: Monte-Carlo policy evaluation with common
// random numbers and the MRAS optimizer over the 2M access weights. A tiny
// full-state oracle (M <= 4) searches all M*2^M access probabilities and
// provides an upper-bound score for the heuristic on small instances.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "specrec/hetero_policy.hpp"
#include "specrec/mras.hpp"
#include "specrec/sim.hpp"

namespace specrec {

struct HeteroEvalConfig {
  long horizon = 20000;
  int replications = 10;
};

namespace detail {

// Stream tags: the channel stream depends on (base seed, replication) only,
// so every candidate faces identical channel realizations; the decision
// stream additionally carries the candidate ordinal.
inline constexpr std::uint64_t kChannelTag = 0x6845c2aaULL;
inline constexpr std::uint64_t kDecisionTag = 0x77e1d099ULL;

inline double run_hetero_replication(const HeteroModel& model, const Scheme& scheme, long horizon,
                                     std::uint64_t base_seed, long candidate, int replication) {
  SimConfig cfg;
  cfg.m_channels = model.m();
  cfg.n_users = model.n_users;
  cfg.horizon_t = horizon;
  cfg.scheme = scheme;
  cfg.channels = model.channels;
  Simulator sim(cfg, derive_seed(base_seed, kChannelTag, static_cast<std::uint64_t>(replication)),
                derive_seed(base_seed, kDecisionTag, static_cast<std::uint64_t>(candidate),
                            static_cast<std::uint64_t>(replication)));
  for (long t = 0; t < horizon; ++t) sim.step();
  return sim.average_throughput();
}

inline std::pair<double, double> hetero_scheme_stats(const HeteroModel& model,
                                                     const Scheme& scheme,
                                                     const HeteroEvalConfig& eval,
                                                     std::uint64_t base_seed, long candidate) {
  double sum = 0.0, sumsq = 0.0;
  for (int rep = 0; rep < eval.replications; ++rep) {
    const double v =
        run_hetero_replication(model, scheme, eval.horizon, base_seed, candidate, rep);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / eval.replications;
  double se = 0.0;
  if (eval.replications > 1) {
    const double var =
        std::max(0.0, (sumsq - eval.replications * mean * mean) / (eval.replications - 1));
    se = std::sqrt(var / eval.replications);
  }
  return {mean, se};
}

}  // namespace detail

// Time-average system throughput of a weight policy; -inf when any weight
// leaves (0,1). Same base seed => bit-identical result.
inline double evaluate_hetero(const HeteroModel& model, const HeteroWeightPolicy& policy,
                              const HeteroEvalConfig& eval, std::uint64_t base_seed,
                              long candidate = 0) {
  if (static_cast<int>(policy.w_rec.size()) != model.m() ||
      static_cast<int>(policy.w_unrec.size()) != model.m())
    return kNegInf;
  if (!policy.interior()) return kNegInf;
  return detail::hetero_scheme_stats(model, HeteroWeightsScheme{policy}, eval, base_seed,
                                     candidate)
      .first;
}

// Mean and replication standard error, for statistical comparisons.
inline std::pair<double, double> evaluate_hetero_stats(const HeteroModel& model,
                                                       const HeteroWeightPolicy& policy,
                                                       const HeteroEvalConfig& eval,
                                                       std::uint64_t base_seed) {
  if (!policy.interior()) return {kNegInf, 0.0};
  return detail::hetero_scheme_stats(model, HeteroWeightsScheme{policy}, eval, base_seed, 0);
}

inline std::pair<double, double> evaluate_scheme_stats(const HeteroModel& model,
                                                       const Scheme& scheme,
                                                       const HeteroEvalConfig& eval,
                                                       std::uint64_t base_seed) {
  return detail::hetero_scheme_stats(model, scheme, eval, base_seed, 0);
}

// MRAS over the 2M Gaussian parameters {(mu_1^m, mu_0^m, sigma_1^m,
// sigma_0^m)}. Genome layout: [w_rec(0..M-1), w_unrec(0..M-1)].
inline std::pair<HeteroWeightPolicy, MrasTrace> mras_solve_hetero(const HeteroModel& model,
                                                                  const MrasConfig& cfg,
                                                                  const HeteroEvalConfig& eval,
                                                                  RandomStream& rng) {
  const int m = model.m();
  const std::uint64_t base_seed = rng.next_u64();
  auto objective = [&model, &eval, base_seed, m](const std::vector<double>& x, long ordinal) {
    HeteroWeightPolicy pol;
    pol.w_rec.assign(x.begin(), x.begin() + m);
    pol.w_unrec.assign(x.begin() + m, x.end());
    return evaluate_hetero(model, pol, eval, base_seed, ordinal);
  };
  auto run = mras_optimize(2 * m, objective, cfg, rng);
  HeteroWeightPolicy pol;
  pol.w_rec.assign(run.best_x.begin(), run.best_x.begin() + m);
  pol.w_unrec.assign(run.best_x.begin() + m, run.best_x.end());
  return {std::move(pol), std::move(run.trace)};
}

// Full-state access policy for tiny instances: one access vector per
// recommendation bitmask.
struct HeteroFullPolicy {
  int m = 0;
  std::vector<std::vector<double>> probs_by_state;
};

// Project raw sampled values onto the access simplex of one state.
inline std::vector<double> project_to_simplex(std::span<const double> raw) {
  std::vector<double> out(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::max(raw[i], kActionFloor);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

// MRAS over all M*2^M access probabilities. Refuses M > 4: the decision
// space blows up combinatorially and the heuristic exists for exactly that
// reason.
inline std::pair<HeteroFullPolicy, MrasTrace> tiny_full_hetero_oracle(const HeteroModel& model,
                                                                      const MrasConfig& cfg,
                                                                      const HeteroEvalConfig& eval,
                                                                      RandomStream& rng) {
  const int m = model.m();
  if (m > 4)
    throw std::invalid_argument("tiny_full_hetero_oracle: refusing M > 4 (M*2^M decision blow-up)");
  const int num_states = 1 << m;
  const std::uint64_t base_seed = rng.next_u64();

  auto unpack = [m, num_states](const std::vector<double>& x) {
    HeteroFullPolicy pol;
    pol.m = m;
    pol.probs_by_state.reserve(num_states);
    for (int s = 0; s < num_states; ++s)
      pol.probs_by_state.push_back(
          project_to_simplex(std::span<const double>(x.data() + s * m, m)));
    return pol;
  };
  auto objective = [&model, &eval, base_seed, &unpack](const std::vector<double>& x,
                                                       long ordinal) {
    const auto pol = unpack(x);
    return detail::hetero_scheme_stats(model, FullTableScheme{pol.probs_by_state}, eval,
                                       base_seed, ordinal)
        .first;
  };
  auto run = mras_optimize(num_states * m, objective, cfg, rng);
  return {unpack(run.best_x), std::move(run.trace)};
}

inline std::pair<double, double> evaluate_full_policy_stats(const HeteroModel& model,
                                                            const HeteroFullPolicy& policy,
                                                            const HeteroEvalConfig& eval,
                                                            std::uint64_t base_seed) {
  return detail::hetero_scheme_stats(model, FullTableScheme{policy.probs_by_state}, eval,
                                     base_seed, 0);
}

}  // namespace specrec
