// Slotted network simulator: N users, M Markov channels, one slot =
// sensing -> contention -> transmission -> recommendation/selection.
//
// Two independent random streams drive a run: the channel stream advances
// channel states with exactly one draw per channel per slot regardless of the
// access scheme (common-random-number comparisons), the decision stream
// covers user selections and backoff contention.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "specrec/channel.hpp"
#include "specrec/hetero_policy.hpp"
#include "specrec/mdp.hpp"
#include "specrec/rng.hpp"

namespace specrec {

enum class ContentionMode { Idealized, MiniSlots };

struct Contention {
  ContentionMode mode = ContentionMode::Idealized;
  int lambda_star = 16;  // mini-slot count, MiniSlots only
};

struct RandomScheme {};
struct StaticScheme {
  double p_rec;
};
struct HeuristicAdaptiveScheme {};
struct PolicyDrivenScheme {
  Policy policy;
};
struct HeteroWeightsScheme {
  HeteroWeightPolicy weights;
};
// Per-state access table indexed by the recommendation bitmask; used by the
// tiny full heterogeneous oracle.
struct FullTableScheme {
  std::vector<std::vector<double>> probs_by_state;
};

using Scheme = std::variant<RandomScheme, StaticScheme, HeuristicAdaptiveScheme,
                            PolicyDrivenScheme, HeteroWeightsScheme, FullTableScheme>;

inline const char* scheme_name(const Scheme& s) {
  switch (s.index()) {
    case 0: return "random";
    case 1: return "static";
    case 2: return "heuristic";
    case 3: return "policy";
    case 4: return "hetero";
    default: return "full-table";
  }
}

struct SimConfig {
  int m_channels = 10;
  int n_users = 5;
  long horizon_t = 2000;
  int buffer_w = 1;
  Scheme scheme = RandomScheme{};
  Contention contention;
  std::uint64_t seed = 1;
  std::vector<ChannelParams> channels;  // one entry per channel
  ZeroStateSemantics zero_mode = ZeroStateSemantics::IdleBranch;
  bool start_from_stationary = false;  // default: all channels start idle
  bool collect_trace = false;
};

inline std::vector<ChannelParams> homogeneous_channels(int m, const ChannelParams& cp) {
  return std::vector<ChannelParams>(m, cp);
}

struct SlotRecord {
  long t = 0;
  int idle_count = 0;
  int used_count = 0;
  double system_throughput = 0.0;
  int r_next = 0;
  // Detailed fields, filled only when trace collection is on.
  std::vector<std::uint8_t> channel_idle;
  std::vector<int> chosen;           // per-user sensed channel, -1 = silent
  std::vector<int> winner;           // per-channel winning user, -1 = none
  std::vector<double> user_throughput;
  std::vector<int> recommended;      // channels in the buffer at slot end
};

struct SlotTrace {
  std::vector<SlotRecord> slots;
};

// Pick a channel under the static branching rule: recommended channels share
// probability p_rec uniformly, the rest share 1-p_rec; with an empty or full
// recommendation set the choice is uniform over all M channels.
inline int select_channel_static(std::span<const int> recommended, int m_channels, double p_rec,
                                 RandomStream& rng) {
  const int r = static_cast<int>(recommended.size());
  if (r < 0 || r > m_channels)
    throw std::invalid_argument("select_channel_static: bad recommendation count");
  if (r == 0 || r == m_channels) return static_cast<int>(rng.below(m_channels));
  if (rng.bernoulli(p_rec)) return recommended[rng.below(r)];
  // index into the complement of the (sorted) recommended set
  int j = static_cast<int>(rng.below(m_channels - r));
  int rec_pos = 0;
  for (int ch = 0; ch < m_channels; ++ch) {
    if (rec_pos < r && recommended[rec_pos] == ch) {
      ++rec_pos;
      continue;
    }
    if (j == 0) return ch;
    --j;
  }
  return m_channels - 1;  // unreachable
}

// Resolve contention among k users on one idle channel. Returns the winner's
// index in [0,k), or nothing when tied backoffs collide.
inline std::optional<int> resolve_contention(int k, const Contention& c, RandomStream& rng) {
  if (k < 1) throw std::invalid_argument("resolve_contention: need at least one contender");
  if (k == 1) return 0;
  if (c.mode == ContentionMode::Idealized) return static_cast<int>(rng.below(k));
  if (c.lambda_star < 1) throw std::invalid_argument("resolve_contention: lambda_star must be >= 1");
  int best = -1, best_backoff = c.lambda_star + 1;
  bool tie = false;
  for (int i = 0; i < k; ++i) {
    const int backoff = 1 + static_cast<int>(rng.below(c.lambda_star));
    if (backoff < best_backoff) {
      best_backoff = backoff;
      best = i;
      tie = false;
    } else if (backoff == best_backoff) {
      tie = true;
    }
  }
  if (tie) return std::nullopt;
  return best;
}

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : Simulator(cfg, derive_seed(cfg.seed, 0x6368616eULL),   // channel stream
                  derive_seed(cfg.seed, 0x64656369ULL)) {}     // decision stream

  Simulator(const SimConfig& cfg, std::uint64_t channel_seed, std::uint64_t decision_seed)
      : cfg_(cfg), channel_rng_(channel_seed), decision_rng_(decision_seed) {
    validate();
    states_.assign(cfg_.m_channels, ChannelState::Idle);
    if (cfg_.start_from_stationary) {
      for (int m = 0; m < cfg_.m_channels; ++m)
        states_[m] = channel_rng_.bernoulli(stationary_idle_prob(cfg_.channels[m]))
                         ? ChannelState::Idle
                         : ChannelState::Busy;
    }
    chosen_.assign(cfg_.n_users, -1);
    select_all();
  }

  void step() {
    ++t_;
    const int m = cfg_.m_channels;
    const int n = cfg_.n_users;

    // Channel states advance; exactly one draw per channel per slot.
    for (int ch = 0; ch < m; ++ch)
      states_[ch] = step_channel(states_[ch], cfg_.channels[ch], channel_rng_);

    // Sensing and contention: users sense their pre-selected channel; idle
    // channels with contenders resolve to at most one winner.
    contenders_.assign(m, std::vector<int>{});
    for (int u = 0; u < n; ++u)
      if (chosen_[u] >= 0) contenders_[chosen_[u]].push_back(u);

    SlotRecord rec;
    rec.t = t_;
    double slot_tp = 0.0;
    std::vector<int> winner_by_channel(cfg_.collect_trace ? m : 0, -1);
    std::vector<double> user_tp(cfg_.collect_trace ? n : 0, 0.0);
    int used = 0;
    for (int ch = 0; ch < m; ++ch) {
      if (states_[ch] == ChannelState::Idle) ++rec.idle_count;
      const auto& users = contenders_[ch];
      if (users.empty() || states_[ch] != ChannelState::Idle) continue;
      const auto win = resolve_contention(static_cast<int>(users.size()), cfg_.contention,
                                          decision_rng_);
      if (!win) continue;
      const int winner = users[*win];
      const double b = cfg_.channels[ch].rate_b;
      slot_tp += b;
      ++used;
      buffer_[ch] = t_;  // successful transmission -> broadcast recommendation
      if (cfg_.collect_trace) {
        winner_by_channel[ch] = winner;
        user_tp[winner] = b;
      }
    }

    // Expire recommendations older than the W-slot window.
    for (auto it = buffer_.begin(); it != buffer_.end();) {
      if (it->second <= t_ - cfg_.buffer_w)
        it = buffer_.erase(it);
      else
        ++it;
    }
    rec_list_.clear();
    for (const auto& [ch, slot] : buffer_) rec_list_.push_back(ch);

    total_tp_ += slot_tp;
    rec.used_count = used;
    rec.system_throughput = slot_tp;
    rec.r_next = static_cast<int>(rec_list_.size());
    if (cfg_.collect_trace) {
      rec.channel_idle.resize(m);
      for (int ch = 0; ch < m; ++ch) rec.channel_idle[ch] = states_[ch] == ChannelState::Idle;
      rec.chosen = chosen_;
      rec.winner = std::move(winner_by_channel);
      rec.user_throughput = std::move(user_tp);
      rec.recommended = rec_list_;
      trace_.slots.push_back(rec);
    }
    last_ = std::move(rec);

    // Channel selection for the next slot.
    select_all();
  }

  long slot() const { return t_; }
  double total_throughput() const { return total_tp_; }
  double average_throughput() const { return t_ == 0 ? 0.0 : total_tp_ / static_cast<double>(t_); }
  const std::vector<int>& recommended_channels() const { return rec_list_; }
  const std::vector<int>& chosen_channels() const { return chosen_; }
  const SlotRecord& last_record() const { return last_; }
  const SlotTrace& trace() const { return trace_; }

 private:
  void validate() const {
    if (cfg_.m_channels < 1 || cfg_.n_users < 1)
      throw std::invalid_argument("SimConfig: M and N must be >= 1");
    if (cfg_.horizon_t < 1) throw std::invalid_argument("SimConfig: horizon must be >= 1");
    if (cfg_.buffer_w < 1) throw std::invalid_argument("SimConfig: W must be >= 1");
    if (static_cast<int>(cfg_.channels.size()) != cfg_.m_channels)
      throw std::invalid_argument("SimConfig: need one ChannelParams per channel");
    if (cfg_.buffer_w > 1 && cfg_.scheme.index() > 1)
      throw std::invalid_argument(
          "SimConfig: W > 1 is supported for the random/static schemes only");
    if (const auto* st = std::get_if<StaticScheme>(&cfg_.scheme)) {
      if (!(st->p_rec > 0.0 && st->p_rec < 1.0))
        throw std::invalid_argument("StaticScheme: p_rec must lie in (0,1)");
    }
    if (const auto* pd = std::get_if<PolicyDrivenScheme>(&cfg_.scheme)) {
      const int states = std::min(cfg_.m_channels, cfg_.n_users) + 1;
      if (static_cast<int>(pd->policy.p_rec.size()) < states)
        throw std::invalid_argument("PolicyDrivenScheme: policy is missing states");
    }
    if (const auto* hw = std::get_if<HeteroWeightsScheme>(&cfg_.scheme)) {
      if (static_cast<int>(hw->weights.w_rec.size()) != cfg_.m_channels ||
          static_cast<int>(hw->weights.w_unrec.size()) != cfg_.m_channels)
        throw std::invalid_argument("HeteroWeightsScheme: weight length does not match M");
    }
    if (const auto* ft = std::get_if<FullTableScheme>(&cfg_.scheme)) {
      if (static_cast<int>(ft->probs_by_state.size()) != (1 << cfg_.m_channels))
        throw std::invalid_argument("FullTableScheme: need one access vector per state");
    }
  }

  int pick_unrecommended(RandomStream& rng) const {
    const int m = cfg_.m_channels;
    const int r = static_cast<int>(rec_list_.size());
    int j = static_cast<int>(rng.below(m - r));
    int rec_pos = 0;
    for (int ch = 0; ch < m; ++ch) {
      if (rec_pos < r && rec_list_[rec_pos] == ch) {
        ++rec_pos;
        continue;
      }
      if (j == 0) return ch;
      --j;
    }
    return m - 1;
  }

  int select_one(RandomStream& rng) {
    const int m = cfg_.m_channels;
    const int r = static_cast<int>(rec_list_.size());
    switch (cfg_.scheme.index()) {
      case 0:  // random access
        return static_cast<int>(rng.below(m));
      case 1:
        return select_channel_static(rec_list_, m, std::get<StaticScheme>(cfg_.scheme).p_rec,
                                     rng);
      case 2:
        return select_channel_static(rec_list_, m, heuristic_branching(r, cfg_.n_users), rng);
      case 3: {
        const auto& pol = std::get<PolicyDrivenScheme>(cfg_.scheme).policy;
        const double a = pol.p_rec[r];
        if (rng.bernoulli(a)) {
          if (r > 0) return rec_list_[rng.below(r)];
          return cfg_.zero_mode == ZeroStateSemantics::RandomAccess
                     ? static_cast<int>(rng.below(m))
                     : -1;
        }
        if (m - r > 0) return pick_unrecommended(rng);
        return cfg_.zero_mode == ZeroStateSemantics::RandomAccess
                   ? static_cast<int>(rng.below(m))
                   : -1;
      }
      case 4: {
        HeteroState state;
        state.indicators.assign(m, 0);
        for (int ch : rec_list_) state.indicators[ch] = 1;
        const auto probs = access_probs(std::get<HeteroWeightsScheme>(cfg_.scheme).weights, state);
        return rng.categorical(probs);
      }
      default: {
        int mask = 0;
        for (int ch : rec_list_) mask |= 1 << ch;
        const auto& probs = std::get<FullTableScheme>(cfg_.scheme).probs_by_state[mask];
        return rng.categorical(probs);
      }
    }
  }

  void select_all() {
    for (int u = 0; u < cfg_.n_users; ++u) chosen_[u] = select_one(decision_rng_);
  }

  SimConfig cfg_;
  RandomStream channel_rng_;
  RandomStream decision_rng_;
  std::vector<ChannelState> states_;
  std::vector<int> chosen_;
  std::vector<std::vector<int>> contenders_;
  std::map<int, long> buffer_;  // channel -> slot of latest successful use
  std::vector<int> rec_list_;   // sorted
  long t_ = 0;
  double total_tp_ = 0.0;
  SlotRecord last_;
  SlotTrace trace_;
};

struct SimResult {
  double avg_throughput = 0.0;
  long slots = 0;
  SlotTrace trace;
};

inline SimResult run_simulation(const SimConfig& cfg) {
  Simulator sim(cfg);
  for (long t = 0; t < cfg.horizon_t; ++t) sim.step();
  SimResult result;
  result.avg_throughput = sim.average_throughput();
  result.slots = cfg.horizon_t;
  result.trace = sim.trace();
  return result;
}

// CSV trace export: t, idle_count, used_count, system_throughput, r_next.
inline void write_trace_csv(const SlotTrace& trace, std::ostream& os) {
  os << "t,idle_count,used_count,system_throughput,r_next\n";
  for (const auto& s : trace.slots)
    os << s.t << ',' << s.idle_count << ',' << s.used_count << ',' << s.system_throughput << ','
       << s.r_next << '\n';
}

}  // namespace specrec
