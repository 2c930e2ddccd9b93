// Adaptive channel-recommendation MDP over the homogeneous channel model:
// state R = number of distinct recommended channels, action P_rec = branching
// probability into the recommended set.
//
// Transition kernels provided:
//   * transition_prob_composition - combinatorial triple sum with
//                                   ordered-selection/composition counting
//                                   (kept for fidelity comparison)
//   * transition_prob_exact       - same slot process with distinguishable
//                                   users (surjection occupancy counts;
//                                   row-stochastic)
//   * transition_prob_mc          - Monte-Carlo process oracle
//   * transition_prob_infinite_m / saturation_transition - asymptotic kernels
//
// Policy evaluation goes through the stationary distribution of the induced
// chain; discretized dynamic-programming solvers serve as brute-force oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "specrec/channel.hpp"
#include "specrec/rng.hpp"

namespace specrec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Action-space interior used when a degenerate probability has to act as an
// MDP action.
inline constexpr double kActionFloor = 1e-6;

// What users do when their chosen branch is empty (R = 0 recommended set, or
// R = M unrecommended set). IdleBranch: they stay silent for the slot, the
// convention the two-user closed-form enumerations pin down. RandomAccess:
// the whole population falls back to uniform access over all M channels.
enum class ZeroStateSemantics { IdleBranch, RandomAccess };

enum class TransitionFormula { Composition, Exact };

struct MdpModel {
  int m_channels;
  int n_users;
  ChannelParams channel;
  ZeroStateSemantics zero_mode = ZeroStateSemantics::IdleBranch;

  MdpModel(int m, int n, ChannelParams ch,
           ZeroStateSemantics mode = ZeroStateSemantics::IdleBranch)
      : m_channels(m), n_users(n), channel(ch), zero_mode(mode) {
    if (m < 1) throw std::invalid_argument("MdpModel: M must be >= 1");
    if (n < 1) throw std::invalid_argument("MdpModel: N must be >= 1");
  }

  int num_states() const { return std::min(m_channels, n_users) + 1; }
};

// Stationary policy: one branching probability per state R. Feasible entries
// are strictly inside (0,1); infeasible policies evaluate to -inf.
struct Policy {
  std::vector<double> p_rec;

  bool interior() const {
    for (double a : p_rec)
      if (!(a > 0.0 && a < 1.0)) return false;
    return !p_rec.empty();
  }
};

struct TransitionMatrix {
  std::vector<std::vector<double>> rows;

  int size() const { return static_cast<int>(rows.size()); }
};

// ---------------------------------------------------------------------------
// Small combinatorial helpers.

namespace detail {

inline double lchoose(int n, int k) {
  if (k < 0 || k > n) return kNegInf;
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

inline std::vector<double> binomial_pmf(int n, double s) {
  std::vector<double> pmf(n + 1, 0.0);
  if (n == 0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (s <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (s >= 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double ls = std::log(s);
  const double l1s = std::log1p(-s);
  for (int j = 0; j <= n; ++j)
    pmf[j] = std::exp(detail::lchoose(n, j) + j * ls + (n - j) * l1s);
  return pmf;
}

// P(exactly k distinct channels hit | n users choose uniformly among c
// channels), computed by the stable one-user-at-a-time recurrence.
inline std::vector<double> occupancy_exact(int n, int c) {
  const int kmax = std::min(n, c);
  std::vector<double> occ(kmax + 1, 0.0), next(kmax + 1, 0.0);
  occ[0] = 1.0;
  for (int u = 0; u < n; ++u) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int k = 0; k <= std::min(u, kmax); ++k) {
      if (occ[k] == 0.0) continue;
      next[k] += occ[k] * (static_cast<double>(k) / c);
      if (k + 1 <= kmax) next[k + 1] += occ[k] * (static_cast<double>(c - k) / c);
    }
    occ.swap(next);
  }
  return occ;
}

// Occupancy weights built from ordered channel selections times composition
// counts, C(c,k)*k!*C(n-1,k-1)/c^n. These are not a probability distribution
// for n >= 3 hitting k >= 2; the divergence from occupancy_exact is the
// Composition/Exact fidelity gap.
inline std::vector<double> occupancy_composition(int n, int c) {
  const int kmax = std::min(n, c);
  std::vector<double> occ(kmax + 1, 0.0);
  if (n == 0) {
    occ[0] = 1.0;
    return occ;
  }
  const double lc = std::log(static_cast<double>(c));
  for (int k = 1; k <= kmax; ++k) {
    const double lperm = std::lgamma(c + 1.0) - std::lgamma(c - k + 1.0);
    occ[k] = std::exp(lperm + detail::lchoose(n - 1, k - 1) - n * lc);
  }
  return occ;
}

// Thin an occupancy distribution with an independent per-channel success
// probability: out[j] = sum_k occ[k] * Binom(k, j, s).
inline std::vector<double> thin_binomial(const std::vector<double>& occ, double s) {
  const int kmax = static_cast<int>(occ.size()) - 1;
  std::vector<double> out(kmax + 1, 0.0);
  for (int k = 0; k <= kmax; ++k) {
    if (occ[k] == 0.0) continue;
    const auto pmf = binomial_pmf(k, s);
    for (int j = 0; j <= k; ++j) out[j] += occ[k] * pmf[j];
  }
  return out;
}

inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-slot transition rows.

namespace detail {

inline void check_action(double p_rec) {
  if (!(p_rec > 0.0 && p_rec < 1.0))
    throw std::domain_error("transition: P_rec must lie strictly in (0,1), got " +
                            std::to_string(p_rec));
}

inline void check_state(const MdpModel& model, int r) {
  if (r < 0 || r >= model.num_states())
    throw std::domain_error("transition: state R out of range");
}

inline std::vector<double> occupancy(int n, int c, TransitionFormula f) {
  return f == TransitionFormula::Exact ? occupancy_exact(n, c) : occupancy_composition(n, c);
}

}  // namespace detail

// Full transition row from state r under action p_rec, length num_states().
inline std::vector<double> transition_row(const MdpModel& model, int r, double p_rec,
                                          TransitionFormula formula) {
  detail::check_action(p_rec);
  detail::check_state(model, r);
  const int m = model.m_channels;
  const int n = model.n_users;
  const int num_states = model.num_states();
  const double idle_stat = stationary_idle_prob(model.channel);
  const double keep_idle = 1.0 - model.channel.q;

  std::vector<double> row(num_states, 0.0);

  if (model.zero_mode == ZeroStateSemantics::RandomAccess && (r == 0 || r == m)) {
    // Whole population accesses uniformly over all M channels; an accessed
    // channel yields a recommendation with the side-appropriate idle prob.
    const auto occ = detail::occupancy(n, m, formula);
    const auto dist = thin_binomial(occ, r == 0 ? idle_stat : keep_idle);
    for (std::size_t j = 0; j < dist.size() && j < row.size(); ++j) row[j] += dist[j];
    return row;
  }

  const auto branch = binomial_pmf(n, p_rec);
  for (int n_r = 0; n_r <= n; ++n_r) {
    if (branch[n_r] == 0.0) continue;
    const int n_u = n - n_r;
    std::vector<double> rec_dist, unrec_dist;
    if (r == 0) {
      rec_dist = {1.0};  // chosen branch empty: silent slot
    } else {
      rec_dist = thin_binomial(detail::occupancy(n_r, r, formula), keep_idle);
    }
    if (m - r == 0) {
      unrec_dist = {1.0};
    } else {
      unrec_dist = thin_binomial(detail::occupancy(n_u, m - r, formula), idle_stat);
    }
    const auto conv = convolve(rec_dist, unrec_dist);
    for (std::size_t j = 0; j < conv.size() && j < row.size(); ++j) row[j] += branch[n_r] * conv[j];
  }
  return row;
}

inline double transition_prob_composition(const MdpModel& model, int r, int r_next, double p_rec) {
  detail::check_state(model, r_next);
  return transition_row(model, r, p_rec, TransitionFormula::Composition)[r_next];
}

inline double transition_prob_exact(const MdpModel& model, int r, int r_next, double p_rec) {
  detail::check_state(model, r_next);
  return transition_row(model, r, p_rec, TransitionFormula::Exact)[r_next];
}

// Monte-Carlo process oracle: simulates the one-slot process `samples` times
// and returns the empirical distribution of the next recommendation count.
inline std::vector<double> transition_prob_mc(const MdpModel& model, int r, double p_rec,
                                              long samples, RandomStream& rng) {
  detail::check_action(p_rec);
  detail::check_state(model, r);
  if (samples < 1) throw std::invalid_argument("transition_prob_mc: samples must be >= 1");
  const int m = model.m_channels;
  const int n = model.n_users;
  const double idle_stat = stationary_idle_prob(model.channel);
  const double keep_idle = 1.0 - model.channel.q;
  const bool random_access =
      model.zero_mode == ZeroStateSemantics::RandomAccess && (r == 0 || r == m);

  std::vector<long> counts(model.num_states(), 0);
  std::vector<std::uint8_t> rec_hit(std::max(r, 1)), unrec_hit(std::max(m - r, 1)),
      all_hit(m);
  for (long s = 0; s < samples; ++s) {
    int next = 0;
    if (random_access) {
      std::fill(all_hit.begin(), all_hit.end(), 0);
      for (int u = 0; u < n; ++u) all_hit[rng.below(m)] = 1;
      const double succ = r == 0 ? idle_stat : keep_idle;
      for (int ch = 0; ch < m; ++ch)
        if (all_hit[ch] && rng.bernoulli(succ)) ++next;
    } else {
      std::fill(rec_hit.begin(), rec_hit.begin() + std::max(r, 1), 0);
      std::fill(unrec_hit.begin(), unrec_hit.begin() + std::max(m - r, 1), 0);
      for (int u = 0; u < n; ++u) {
        if (rng.bernoulli(p_rec)) {
          if (r > 0) rec_hit[rng.below(r)] = 1;  // empty branch: silent
        } else {
          if (m - r > 0) unrec_hit[rng.below(m - r)] = 1;
        }
      }
      for (int ch = 0; ch < r; ++ch)
        if (rec_hit[ch] && rng.bernoulli(keep_idle)) ++next;
      for (int ch = 0; ch < m - r; ++ch)
        if (unrec_hit[ch] && rng.bernoulli(idle_stat)) ++next;
    }
    ++counts[next];
  }
  std::vector<double> freq(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    freq[i] = static_cast<double>(counts[i]) / static_cast<double>(samples);
  return freq;
}

// M -> infinity kernel: unrecommended users never collide, so each one is an
// independent Bernoulli(p/(p+q)) recommendation source. State space {0..N}.
inline std::vector<double> infinite_m_row(int n_users, int r, double p_rec, double p, double q) {
  detail::check_action(p_rec);
  if (n_users < 1) throw std::invalid_argument("infinite_m_row: N must be >= 1");
  if (r < 0 || r > n_users) throw std::domain_error("infinite_m_row: state R out of range");
  const double idle_stat = p / (p + q);
  const double keep_idle = 1.0 - q;

  std::vector<double> row(n_users + 1, 0.0);
  const auto branch = binomial_pmf(n_users, p_rec);
  for (int n_r = 0; n_r <= n_users; ++n_r) {
    if (branch[n_r] == 0.0) continue;
    std::vector<double> rec_dist;
    if (r == 0) {
      rec_dist = {1.0};
    } else {
      rec_dist = thin_binomial(occupancy_exact(n_r, r), keep_idle);
    }
    const auto unrec_dist = binomial_pmf(n_users - n_r, idle_stat);
    const auto conv = convolve(rec_dist, unrec_dist);
    for (std::size_t j = 0; j < conv.size() && j < row.size(); ++j)
      row[j] += branch[n_r] * conv[j];
  }
  return row;
}

inline double transition_prob_infinite_m(int n_users, int r, int r_next, double p_rec, double p,
                                         double q) {
  if (r_next < 0 || r_next > n_users) return 0.0;
  return infinite_m_row(n_users, r, p_rec, p, q)[r_next];
}

// N -> infinity saturation kernel: every channel is accessed, so the row is
// independent of the branching probability by construction.
inline std::vector<double> saturation_row(int m_channels, int r, double p, double q) {
  if (r < 0 || r > m_channels) throw std::domain_error("saturation_row: state R out of range");
  const double idle_stat = p / (p + q);
  return convolve(binomial_pmf(r, 1.0 - q), binomial_pmf(m_channels - r, idle_stat));
}

inline double saturation_transition(int m_channels, int r, int r_next, double p, double q) {
  if (r_next < 0 || r_next > m_channels) return 0.0;
  return saturation_row(m_channels, r, p, q)[r_next];
}

// ---------------------------------------------------------------------------
// Rewards and policy evaluation.

inline double reward(int r_next, double rate_b) { return r_next * rate_b; }

inline double expected_reward(const MdpModel& model, int r, double p_rec,
                              TransitionFormula formula = TransitionFormula::Exact) {
  const auto row = transition_row(model, r, p_rec, formula);
  double sum = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) sum += row[j] * reward(static_cast<int>(j), model.channel.rate_b);
  return sum;
}

// r/N, clamped into the open action space when used as an MDP action.
inline double heuristic_branching(int r, int n_users) {
  if (n_users < 1) throw std::invalid_argument("heuristic_branching: N must be >= 1");
  const double raw = static_cast<double>(r) / n_users;
  return std::clamp(raw, kActionFloor, 1.0 - kActionFloor);
}

inline Policy heuristic_policy(const MdpModel& model) {
  Policy pol;
  pol.p_rec.reserve(model.num_states());
  for (int r = 0; r < model.num_states(); ++r)
    pol.p_rec.push_back(heuristic_branching(r, model.n_users));
  return pol;
}

inline Policy clamp_policy(const Policy& pol) {
  Policy out = pol;
  for (double& a : out.p_rec) a = std::clamp(a, kActionFloor, 1.0 - kActionFloor);
  return out;
}

inline TransitionMatrix build_chain(const MdpModel& model, const Policy& policy,
                                    TransitionFormula formula = TransitionFormula::Exact) {
  if (static_cast<int>(policy.p_rec.size()) != model.num_states())
    throw std::invalid_argument("build_chain: policy size does not match state space");
  if (!policy.interior())
    throw std::invalid_argument("build_chain: policy entries must lie strictly in (0,1)");
  TransitionMatrix chain;
  chain.rows.reserve(model.num_states());
  const double tol = formula == TransitionFormula::Exact ? 1e-12 : 1e-9;
  for (int r = 0; r < model.num_states(); ++r) {
    auto row = transition_row(model, r, policy.p_rec[r], formula);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream oss;
      oss << "build_chain: row " << r << " sums to " << sum << " (tolerance " << tol
          << "); the composition-count formula is not row-stochastic for N >= 3";
      throw std::runtime_error(oss.str());
    }
    chain.rows.push_back(std::move(row));
  }
  return chain;
}

namespace detail {

// States reachable from `start` along strictly positive transition entries.
inline std::vector<bool> reachable(const TransitionMatrix& chain, int start, bool transpose) {
  const int n = chain.size();
  std::vector<bool> seen(n, false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      const double w = transpose ? chain.rows[v][u] : chain.rows[u][v];
      if (w > 0.0 && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

inline bool is_irreducible(const TransitionMatrix& chain) {
  const auto fwd = detail::reachable(chain, 0, false);
  const auto bwd = detail::reachable(chain, 0, true);
  for (int s = 0; s < chain.size(); ++s)
    if (!fwd[s] || !bwd[s]) return false;
  return true;
}

// Solve pi Q = pi, sum(pi) = 1 by direct elimination with the normalization
// row replacing the last equation. Requires an irreducible chain.
inline std::vector<double> stationary_distribution(const TransitionMatrix& chain) {
  const int n = chain.size();
  if (n == 0) throw std::invalid_argument("stationary_distribution: empty chain");
  {
    const auto fwd = detail::reachable(chain, 0, false);
    const auto bwd = detail::reachable(chain, 0, true);
    std::vector<int> unreachable;
    for (int s = 0; s < n; ++s)
      if (!fwd[s] || !bwd[s]) unreachable.push_back(s);
    if (!unreachable.empty()) {
      std::ostringstream oss;
      oss << "stationary_distribution: chain is reducible; states not communicating with 0:";
      for (int s : unreachable) oss << ' ' << s;
      throw std::runtime_error(oss.str());
    }
  }

  // A = Q^T - I, last row replaced by ones; b = e_last.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = chain.rows[j][i] - (i == j ? 1.0 : 0.0);
  }
  for (int j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(a[i][col]) > std::abs(a[pivot][col])) pivot = i;
    std::swap(a[col], a[pivot]);
    if (a[col][col] == 0.0)
      throw std::runtime_error("stationary_distribution: singular system");
    for (int i = col + 1; i < n; ++i) {
      const double f = a[i][col] / a[col][col];
      if (f == 0.0) continue;
      for (int j = col; j <= n; ++j) a[i][j] -= f * a[col][j];
    }
  }
  std::vector<double> pi(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double acc = a[i][n];
    for (int j = i + 1; j < n; ++j) acc -= a[i][j] * pi[j];
    pi[i] = acc / a[i][i];
  }
  double total = 0.0;
  for (double& v : pi) {
    if (v < 0.0 && v > -1e-12) v = 0.0;
    total += v;
  }
  for (double& v : pi) v /= total;

  double residual = 0.0;
  for (int j = 0; j < n; ++j) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) col += pi[i] * chain.rows[i][j];
    residual = std::max(residual, std::abs(col - pi[j]));
  }
  if (residual > 1e-10)
    throw std::runtime_error("stationary_distribution: residual " + std::to_string(residual) +
                             " exceeds 1e-10");
  return pi;
}

// Damped power iteration cross-check: pi <- pi * (I + Q)/2 until convergence.
inline std::vector<double> stationary_distribution_power(const TransitionMatrix& chain,
                                                         double tol = 1e-13,
                                                         long max_iters = 2000000) {
  const int n = chain.size();
  std::vector<double> pi(n, 1.0 / n), next(n, 0.0);
  for (long it = 0; it < max_iters; ++it) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += pi[i] * chain.rows[i][j];
      next[j] = 0.5 * pi[j] + 0.5 * acc;
    }
    double delta = 0.0, total = 0.0;
    for (int j = 0; j < n; ++j) total += next[j];
    for (int j = 0; j < n; ++j) {
      next[j] /= total;
      delta = std::max(delta, std::abs(next[j] - pi[j]));
    }
    pi.swap(next);
    if (delta < tol) return pi;
  }
  throw std::runtime_error("stationary_distribution_power: no convergence");
}

// Time-average system throughput of a stationary policy; -inf for infeasible
// policies (any entry outside the open interval (0,1)).
inline double policy_throughput(const MdpModel& model, const Policy& policy,
                                TransitionFormula formula = TransitionFormula::Exact) {
  if (static_cast<int>(policy.p_rec.size()) != model.num_states()) return kNegInf;
  if (!policy.interior()) return kNegInf;
  const auto chain = build_chain(model, policy, formula);
  const auto pi = stationary_distribution(chain);
  double phi = 0.0;
  for (int r = 0; r < model.num_states(); ++r)
    phi += pi[r] * reward(r, model.channel.rate_b);
  return phi;
}

// Long-run average reward of a simulated chain trajectory; oracle counterpart
// of policy_throughput.
inline double simulate_chain_average(const MdpModel& model, const Policy& policy, long steps,
                                     RandomStream& rng,
                                     TransitionFormula formula = TransitionFormula::Exact) {
  const auto chain = build_chain(model, policy, formula);
  int state = 0;
  double total = 0.0;
  for (long t = 0; t < steps; ++t) {
    state = rng.categorical(chain.rows[state]);
    total += reward(state, model.channel.rate_b);
  }
  return total / static_cast<double>(steps);
}

// ---------------------------------------------------------------------------
// Discretized dynamic-programming oracles.

// Row provider abstraction so the asymptotic kernels can reuse the solvers.
using TransitionKernel = std::function<std::vector<double>(int r, double action)>;

inline TransitionKernel model_kernel(const MdpModel& model,
                                     TransitionFormula formula = TransitionFormula::Exact) {
  return [model, formula](int r, double a) { return transition_row(model, r, a, formula); };
}

inline TransitionKernel infinite_m_kernel(int n_users, double p, double q) {
  return [n_users, p, q](int r, double a) { return infinite_m_row(n_users, r, a, p, q); };
}

struct RviResult {
  Policy policy;
  double gain = 0.0;
  long iterations = 0;
  double span_residual = 0.0;
};

// Relative value iteration for the average-reward problem over a finite
// action grid. Uses the aperiodicity transformation (damping 1/2), which
// preserves optimal policies and leaves the reported gain to an exact
// stationary-distribution evaluation of the greedy policy.
inline RviResult relative_value_iteration(const MdpModel& model, std::span<const double> grid,
                                          double tol = 1e-10, long max_iters = 500000) {
  if (grid.empty()) throw std::invalid_argument("relative_value_iteration: empty action grid");
  for (double a : grid)
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("relative_value_iteration: grid actions must lie in (0,1)");
  const int n = model.num_states();
  const int na = static_cast<int>(grid.size());

  std::vector<std::vector<std::vector<double>>> rows(n);
  for (int s = 0; s < n; ++s) {
    rows[s].reserve(na);
    for (int a = 0; a < na; ++a) rows[s].push_back(transition_row(model, s, grid[a], TransitionFormula::Exact));
  }

  std::vector<double> v(n, 0.0), w(n, 0.0);
  std::vector<int> best(n, 0);
  double span = 0.0;
  long it = 0;
  for (; it < max_iters; ++it) {
    for (int s = 0; s < n; ++s) {
      double best_q = kNegInf;
      int best_a = 0;
      for (int a = 0; a < na; ++a) {
        double acc = 0.0;
        for (int sp = 0; sp < n; ++sp)
          acc += rows[s][a][sp] * (reward(sp, model.channel.rate_b) + v[sp]);
        if (acc > best_q) {
          best_q = acc;
          best_a = a;
        }
      }
      best[s] = best_a;
      w[s] = 0.5 * v[s] + 0.5 * best_q;  // aperiodicity damping
    }
    double dmax = kNegInf, dmin = -kNegInf;
    for (int s = 0; s < n; ++s) {
      const double d = w[s] - v[s];
      dmax = std::max(dmax, d);
      dmin = std::min(dmin, d);
    }
    span = dmax - dmin;
    const double anchor = w[0];
    for (int s = 0; s < n; ++s) v[s] = w[s] - anchor;
    if (span < tol) break;
  }
  if (span >= tol) {
    throw std::runtime_error("relative_value_iteration: span residual " + std::to_string(span) +
                             " after " + std::to_string(max_iters) + " iterations");
  }
  RviResult result;
  result.iterations = it + 1;
  result.span_residual = span;
  result.policy.p_rec.reserve(n);
  for (int s = 0; s < n; ++s) result.policy.p_rec.push_back(grid[best[s]]);
  result.gain = policy_throughput(model, result.policy, TransitionFormula::Exact);
  return result;
}

struct DiscountedDpResult {
  // values[t][R] for t = 0..horizon; values[horizon] is the terminal payoff
  // U_R. greedy[t][R] is the maximizing grid action for t < horizon.
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> greedy;
};

// Finite-horizon backward recursion for the discounted problem; used for the
// structural (monotonicity) checks. Ties break toward the smaller action.
inline DiscountedDpResult discounted_value_iteration(const TransitionKernel& kernel,
                                                     int num_states, double rate_b, double beta,
                                                     std::span<const double> grid, int horizon) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("discounted_value_iteration: beta must lie in (0,1)");
  if (grid.empty() || horizon < 1)
    throw std::invalid_argument("discounted_value_iteration: empty grid or horizon < 1");

  DiscountedDpResult out;
  out.values.assign(horizon + 1, std::vector<double>(num_states, 0.0));
  out.greedy.assign(horizon, std::vector<double>(num_states, 0.0));
  for (int s = 0; s < num_states; ++s) out.values[horizon][s] = reward(s, rate_b);

  for (int t = horizon - 1; t >= 0; --t) {
    for (int s = 0; s < num_states; ++s) {
      double best_q = kNegInf;
      double best_a = grid[0];
      for (double a : grid) {
        const auto row = kernel(s, a);
        double acc = 0.0;
        for (int sp = 0; sp < static_cast<int>(row.size()) && sp < num_states; ++sp)
          acc += row[sp] * (reward(sp, rate_b) + beta * out.values[t + 1][sp]);
        if (acc > best_q + 1e-15) {
          best_q = acc;
          best_a = a;
        }
      }
      out.values[t][s] = best_q;
      out.greedy[t][s] = best_a;
    }
  }
  return out;
}

inline DiscountedDpResult discounted_value_iteration(const MdpModel& model, double beta,
                                                     std::span<const double> grid, int horizon) {
  return discounted_value_iteration(model_kernel(model), model.num_states(),
                                    model.channel.rate_b, beta, grid, horizon);
}

// ---------------------------------------------------------------------------
// Policy serialization: {"m","n","p","q","b","p_rec"} with p_rec by ascending R.

inline nlohmann::json policy_to_json(const MdpModel& model, const Policy& policy) {
  return nlohmann::json{{"m", model.m_channels}, {"n", model.n_users},
                        {"p", model.channel.p},  {"q", model.channel.q},
                        {"b", model.channel.rate_b}, {"p_rec", policy.p_rec}};
}

inline std::pair<MdpModel, Policy> policy_from_json(const nlohmann::json& j) {
  MdpModel model(j.at("m").get<int>(), j.at("n").get<int>(),
                 ChannelParams(j.at("p").get<double>(), j.at("q").get<double>(),
                               j.at("b").get<double>()));
  Policy policy;
  policy.p_rec = j.at("p_rec").get<std::vector<double>>();
  if (static_cast<int>(policy.p_rec.size()) != model.num_states())
    throw std::invalid_argument("policy_from_json: p_rec length does not match min(M,N)+1");
  return {model, policy};
}

}  // namespace specrec
