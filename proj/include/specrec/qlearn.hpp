// Tabular Q-learning baseline over the discretized action grid {0.1,...,1.0}
// with Boltzmann exploration.
#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "specrec/mdp.hpp"
#include "specrec/rng.hpp"

namespace specrec {

struct QConfig {
  double alpha0 = 0.1;   // initial smoothing factor
  double tau = 5.0;      // Boltzmann temperature (multiplies Q)
  long steps = 2000000;
  double discount = 1.0;
  // alpha_t = alpha0 / (1 + t / alpha_decay_slots); <= 0 disables the decay.
  // The undiscounted update drifts under a max bootstrap; the decay tames it.
  double alpha_decay_slots = 1e4;

  double alpha_at(long t) const {
    if (alpha_decay_slots <= 0.0) return alpha0;
    return alpha0 / (1.0 + static_cast<double>(t) / alpha_decay_slots);
  }
};

struct QTable {
  static constexpr int kNumActions = 10;

  int num_states = 0;
  std::vector<std::array<double, kNumActions>> q;

  explicit QTable(int states) : num_states(states), q(states) {
    for (auto& row : q) row.fill(0.0);
  }

  static double action_value(int a) { return 0.1 * (a + 1); }

  double max_q(int r) const {
    double best = q[r][0];
    for (int a = 1; a < kNumActions; ++a) best = std::max(best, q[r][a]);
    return best;
  }

  // Ties break toward the smaller action index.
  int greedy_action(int r) const {
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
      if (q[r][a] > q[r][best]) best = a;
    return best;
  }
};

inline void q_update(QTable& table, int r, int a, double reward_value, int r_next, double alpha,
                     double discount) {
  table.q[r][a] = (1.0 - alpha) * table.q[r][a] +
                  alpha * (reward_value + discount * table.max_q(r_next));
}

// Sample an action with probability proportional to exp(tau * Q(r, a)).
inline int softmax_action(const QTable& table, int r, double tau, RandomStream& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_action: tau must be > 0");
  std::array<double, QTable::kNumActions> probs{};
  const double qmax = table.max_q(r);
  double total = 0.0;
  for (int a = 0; a < QTable::kNumActions; ++a) {
    probs[a] = std::exp(tau * (table.q[r][a] - qmax));
    total += probs[a];
  }
  for (double& v : probs) v /= total;
  return rng.categorical(probs);
}

struct QTrainResult {
  QTable table;
  Policy greedy;  // entries are raw grid values in {0.1,...,1.0}
};

// Train against the exact MDP transition kernel: sample the next state from
// the row for the chosen action (1.0 clamped into the open action space) and
// receive the realized reward R'*B.
inline QTrainResult train_q(const MdpModel& model, const QConfig& cfg, RandomStream& rng) {
  if (cfg.steps < 1) throw std::invalid_argument("train_q: steps must be >= 1");
  if (!(cfg.alpha0 > 0.0 && cfg.alpha0 < 1.0))
    throw std::invalid_argument("train_q: alpha0 must lie in (0,1)");
  const int states = model.num_states();

  std::vector<std::array<std::vector<double>, QTable::kNumActions>> rows(states);
  for (int r = 0; r < states; ++r)
    for (int a = 0; a < QTable::kNumActions; ++a) {
      const double action = std::min(QTable::action_value(a), 1.0 - kActionFloor);
      rows[r][a] = transition_row(model, r, action, TransitionFormula::Exact);
    }

  QTrainResult result{QTable(states), {}};
  int state = 0;
  for (long t = 0; t < cfg.steps; ++t) {
    const int a = softmax_action(result.table, state, cfg.tau, rng);
    const int next = rng.categorical(rows[state][a]);
    const double u = reward(next, model.channel.rate_b);
    q_update(result.table, state, a, u, next, cfg.alpha_at(t), cfg.discount);
    state = next;
  }

  result.greedy.p_rec.reserve(states);
  for (int r = 0; r < states; ++r)
    result.greedy.p_rec.push_back(QTable::action_value(result.table.greedy_action(r)));
  return result;
}

// CSV export: state, action_value, q.
inline void write_qtable_csv(const QTable& table, std::ostream& os) {
  os << "state,action_value,q\n";
  for (int r = 0; r < table.num_states; ++r)
    for (int a = 0; a < QTable::kNumActions; ++a)
      os << r << ',' << QTable::action_value(a) << ',' << table.q[r][a] << '\n';
}

}  // namespace specrec
