// Heterogeneous-channel state and the 2M-parameter access-weight policy.
// Channel m carries weight w_rec[m] while recommended and w_unrec[m] while
// not; access probabilities are the normalized weights of the current state.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "specrec/channel.hpp"

namespace specrec {

struct HeteroModel {
  std::vector<ChannelParams> channels;
  int n_users;

  HeteroModel(std::vector<ChannelParams> chans, int n) : channels(std::move(chans)), n_users(n) {
    if (channels.empty()) throw std::invalid_argument("HeteroModel: channel list is empty");
    if (n_users < 1) throw std::invalid_argument("HeteroModel: N must be >= 1");
  }

  int m() const { return static_cast<int>(channels.size()); }
};

// Indicator vector: indicators[m] == 1 iff channel m is currently recommended.
struct HeteroState {
  std::vector<std::uint8_t> indicators;
};

struct HeteroWeightPolicy {
  std::vector<double> w_rec;    // P_1^m
  std::vector<double> w_unrec;  // P_0^m

  bool interior() const {
    if (w_rec.empty() || w_rec.size() != w_unrec.size()) return false;
    for (double w : w_rec)
      if (!(w > 0.0 && w < 1.0)) return false;
    for (double w : w_unrec)
      if (!(w > 0.0 && w < 1.0)) return false;
    return true;
  }
};

// P_m = w_{I_m}^m / sum_{m'} w_{I_{m'}}^{m'}; always a probability vector.
inline std::vector<double> access_probs(const HeteroWeightPolicy& policy,
                                        const HeteroState& state) {
  const std::size_t m = state.indicators.size();
  if (policy.w_rec.size() != m || policy.w_unrec.size() != m)
    throw std::invalid_argument("access_probs: policy/state dimension mismatch");
  std::vector<double> probs(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    probs[i] = state.indicators[i] ? policy.w_rec[i] : policy.w_unrec[i];
    total += probs[i];
  }
  for (double& v : probs) v /= total;
  return probs;
}

inline nlohmann::json hetero_policy_to_json(const HeteroModel& model,
                                            const HeteroWeightPolicy& policy) {
  nlohmann::json chans = nlohmann::json::array();
  for (const auto& c : model.channels)
    chans.push_back({{"p", c.p}, {"q", c.q}, {"b", c.rate_b}});
  return nlohmann::json{{"channels", chans},
                        {"n", model.n_users},
                        {"w_rec", policy.w_rec},
                        {"w_unrec", policy.w_unrec}};
}

inline std::pair<HeteroModel, HeteroWeightPolicy> hetero_policy_from_json(
    const nlohmann::json& j) {
  std::vector<ChannelParams> chans;
  for (const auto& c : j.at("channels"))
    chans.emplace_back(c.at("p").get<double>(), c.at("q").get<double>(), c.at("b").get<double>());
  HeteroModel model(std::move(chans), j.at("n").get<int>());
  HeteroWeightPolicy policy;
  policy.w_rec = j.at("w_rec").get<std::vector<double>>();
  policy.w_unrec = j.at("w_unrec").get<std::vector<double>>();
  if (static_cast<int>(policy.w_rec.size()) != model.m() ||
      static_cast<int>(policy.w_unrec.size()) != model.m())
    throw std::invalid_argument("hetero_policy_from_json: weight length does not match M");
  return {std::move(model), std::move(policy)};
}

}  // namespace specrec
