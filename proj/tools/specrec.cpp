// Command-line experiment harness. Subcommands map to campaigns; options can
// be supplied through a JSON config file and overridden by flags.
//
// Exit codes: 0 success, 1 usage/config error, 2 validation failure.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specrec/experiment.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<int> m, n;
  std::optional<std::string> family;
  std::optional<double> epsilon;
  std::vector<double> epsilons;
  std::optional<std::string> scheme;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<long> horizon;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> trace_out;
  std::optional<double> static_p_rec;
  std::optional<int> mras_candidates;
  std::optional<long> q_steps;
};

void add_common_options(CLI::App* cmd, CliOverrides& ov) {
  cmd->add_option("--config", ov.config_path, "JSON config file");
  cmd->add_option("--m", ov.m, "number of channels M");
  cmd->add_option("--n", ov.n, "number of users N");
  cmd->add_option("--family", ov.family, "channel family: type1|type2");
  cmd->add_option("--epsilon", ov.epsilon, "single dynamic factor");
  cmd->add_option("--epsilons", ov.epsilons, "dynamic factor grid");
  cmd->add_option("--scheme", ov.scheme, "single access scheme");
  cmd->add_option("--seed", ov.seed, "single seed");
  cmd->add_option("--seeds", ov.seeds, "seed list");
  cmd->add_option("--horizon", ov.horizon, "slots per simulation (T)");
  cmd->add_option("--out", ov.out, "output file for result rows");
  cmd->add_option("--format", ov.format, "output format: csv|json");
  cmd->add_option("--trace", ov.trace_out, "per-slot trace CSV (single simulate item)");
  cmd->add_option("--static-prec", ov.static_p_rec, "static scheme branching probability");
  cmd->add_option("--mras-candidates", ov.mras_candidates, "MRAS candidates per iteration (L)");
  cmd->add_option("--q-steps", ov.q_steps, "Q-learning training steps");
}

specrec::ExperimentConfig build_config(const CliOverrides& ov, specrec::CampaignKind kind) {
  specrec::ExperimentConfig cfg;
  if (!ov.config_path.empty()) cfg = specrec::config_from_file(ov.config_path);
  cfg.campaign = kind;
  if (ov.m) cfg.m = *ov.m;
  if (ov.n) cfg.n = *ov.n;
  if (ov.family) cfg.families = {specrec::detail::parse_family(*ov.family)};
  if (!ov.epsilons.empty()) cfg.epsilons = ov.epsilons;
  if (ov.epsilon) cfg.epsilons = {*ov.epsilon};
  if (ov.scheme) cfg.schemes = {*ov.scheme};
  if (!ov.seeds.empty()) cfg.seeds = ov.seeds;
  if (ov.seed) cfg.seeds = {*ov.seed};
  if (ov.horizon) cfg.horizon = *ov.horizon;
  if (ov.out) cfg.out = *ov.out;
  if (ov.format) cfg.format = specrec::detail::parse_format(*ov.format);
  if (ov.trace_out) cfg.trace_out = *ov.trace_out;
  if (ov.static_p_rec) cfg.static_p_rec = *ov.static_p_rec;
  if (ov.mras_candidates) {
    cfg.mras.num_candidates = *ov.mras_candidates;
    cfg.mras.validate();
  }
  if (ov.q_steps) cfg.qlearn.steps = *ov.q_steps;
  cfg.validate();
  return cfg;
}

int run(const CliOverrides& ov, specrec::CampaignKind kind) {
  const auto cfg = build_config(ov, kind);
  const auto result = specrec::run_campaign(cfg, &std::cout);
  if (!cfg.out.empty()) {
    specrec::emit_results(result.rows, cfg.format, cfg.out);
    std::cout << result.rows.size() << " rows -> " << cfg.out << '\n';
  } else if (cfg.campaign != specrec::CampaignKind::Validate) {
    std::cout << specrec::rows_to_csv(result.rows);
  }
  if (!result.ok) {
    std::cerr << "validation failed\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive channel-recommendation spectrum access experiments"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    specrec::CampaignKind kind;
  };
  const Sub subs[] = {
      {"solve-mdp", "solve the access MDP with the MRAS search", specrec::CampaignKind::SolveMdp},
      {"train-q", "train the tabular Q-learning baseline", specrec::CampaignKind::TrainQ},
      {"simulate", "run the slotted network simulator", specrec::CampaignKind::Simulate},
      {"sweep", "scheme comparison over the epsilon grid", specrec::CampaignKind::Sweep},
      {"hetero", "heterogeneous-channel scenarios", specrec::CampaignKind::Hetero},
      {"validate", "model-consistency checks (exit 2 on failure)",
       specrec::CampaignKind::Validate},
  };

  std::vector<CliOverrides> overrides(std::size(subs));
  std::vector<specrec::CampaignKind> chosen;
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    auto* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    add_common_options(cmd, overrides[i]);
    cmd->callback([&, i] { chosen.push_back(subs[i].kind); });
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < std::size(subs); ++i) {
    if (!chosen.empty() && chosen.front() == subs[i].kind) {
      try {
        return run(overrides[i], subs[i].kind);
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      }
    }
  }
  return 1;
}
