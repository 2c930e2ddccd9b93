// Two-state Markov channel processes and the Type-1/Type-2 parameter families
// used throughout the experiments.
#pragma once

#include <stdexcept>
#include <string>

#include "specrec/rng.hpp"

namespace specrec {

enum class ChannelState : int { Busy = 0, Idle = 1 };

// Per-channel Markov parameters. p is the busy->idle transition probability
// per slot, q the idle->busy one; rate_b is the data rate achieved by a
// successful transmission on the channel (Mbps).
struct ChannelParams {
  double p;
  double q;
  double rate_b;

  ChannelParams(double p_, double q_, double rate) : p(p_), q(q_), rate_b(rate) {
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("ChannelParams: p must lie in (0,1], got " + std::to_string(p));
    if (!(q > 0.0 && q <= 1.0))
      throw std::invalid_argument("ChannelParams: q must lie in (0,1], got " + std::to_string(q));
    if (!(rate_b > 0.0))
      throw std::invalid_argument("ChannelParams: rate_b must be positive");
  }
};

inline ChannelState step_channel(ChannelState s, const ChannelParams& cp, RandomStream& rng) {
  if (s == ChannelState::Busy) return rng.bernoulli(cp.p) ? ChannelState::Idle : ChannelState::Busy;
  return rng.bernoulli(cp.q) ? ChannelState::Busy : ChannelState::Idle;
}

// Long-run probability of finding the channel idle: p/(p+q).
inline double stationary_idle_prob(const ChannelParams& cp) { return cp.p / (cp.p + cp.q); }

enum class FamilyKind { Type1, Type2 };

// Parameterized transition family scaled by the dynamic factor epsilon.
struct MatrixFamily {
  FamilyKind kind;
  double epsilon;
};

inline const char* family_name(FamilyKind kind) {
  return kind == FamilyKind::Type1 ? "type1" : "type2";
}

// Type 1: p = 0.005*eps, q = 0.025*eps (idle prob 1/6), eps <= 40.
// Type 2: p = q = 0.01*eps (idle prob 1/2), eps <= 100.
inline ChannelParams family_params(const MatrixFamily& fam, double rate_b = 1.0) {
  if (!(fam.epsilon > 0.0))
    throw std::invalid_argument("MatrixFamily: epsilon must be positive");
  const double bound = fam.kind == FamilyKind::Type1 ? 40.0 : 100.0;
  if (fam.epsilon > bound)
    throw std::invalid_argument("MatrixFamily: epsilon " + std::to_string(fam.epsilon) +
                                " exceeds bound " + std::to_string(bound) +
                                " (transition entry would leave [0,1])");
  if (fam.kind == FamilyKind::Type1)
    return ChannelParams(0.005 * fam.epsilon, 0.025 * fam.epsilon, rate_b);
  return ChannelParams(0.01 * fam.epsilon, 0.01 * fam.epsilon, rate_b);
}

}  // namespace specrec
