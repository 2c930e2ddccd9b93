// Experiment harness: campaign configuration, the benchmark sweeps (epsilon
// grids, scheme comparisons, convergence studies, heterogeneous scenarios), a
// deterministic validation suite and CSV/JSON result emission.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "specrec/channel.hpp"
#include "specrec/hetero.hpp"
#include "specrec/mdp.hpp"
#include "specrec/mras.hpp"
#include "specrec/parallel.hpp"
#include "specrec/qlearn.hpp"
#include "specrec/sim.hpp"
#include "specrec/stats.hpp"

namespace specrec {

enum class CampaignKind { SolveMdp, TrainQ, Simulate, Sweep, Hetero, Validate };
enum class OutputFormat { Csv, Json };

inline const char* campaign_name(CampaignKind k) {
  switch (k) {
    case CampaignKind::SolveMdp: return "solve-mdp";
    case CampaignKind::TrainQ: return "train-q";
    case CampaignKind::Simulate: return "simulate";
    case CampaignKind::Sweep: return "sweep";
    case CampaignKind::Hetero: return "hetero";
    default: return "validate";
  }
}

struct ExperimentConfig {
  CampaignKind campaign = CampaignKind::Sweep;
  int m = 10;
  int n = 5;
  std::vector<FamilyKind> families = {FamilyKind::Type1, FamilyKind::Type2};
  std::vector<double> epsilons = {1, 2, 4, 6, 8, 10};
  std::vector<std::string> schemes = {"random", "static", "heuristic", "mras", "qlearn"};
  double static_p_rec = 0.7;
  long horizon = 2000;
  int buffer_w = 1;
  std::vector<std::uint64_t> seeds = {1};
  std::uint64_t solve_seed = 20120213;
  std::string out;        // empty: rows are not written to disk
  std::string trace_out;  // optional per-slot CSV (simulate with a single item)
  OutputFormat format = OutputFormat::Csv;

  MrasConfig mras;
  QConfig qlearn;

  std::vector<double> hetero_rates = {0.2, 0.6, 0.8, 1, 2, 4, 6, 8, 10, 20};
  std::vector<std::string> hetero_orderings = {"first", "second"};
  HeteroEvalConfig hetero_eval{20000, 10};
  HeteroEvalConfig hetero_solve_eval{4000, 2};
  // narrower init than the state-count solver: the genome spans 2M Gaussian
  // components and a 0.5-sigma init rarely lands inside (0,1)^2M
  MrasConfig hetero_mras{60, 0.1, 0.02, 40, 0.5, 0.2};

  void validate() const {
    if (seeds.empty()) throw std::invalid_argument("config field 'seeds': must not be empty");
    if (epsilons.empty())
      throw std::invalid_argument("config field 'epsilons': must not be empty");
    if (families.empty())
      throw std::invalid_argument("config field 'families': must not be empty");
    for (const auto fam : families)
      for (double e : epsilons) family_params(MatrixFamily{fam, e});  // bounds check
    if (!(static_p_rec > 0.0 && static_p_rec < 1.0))
      throw std::invalid_argument("config field 'static_p_rec': must lie in (0,1)");
    if (horizon < 1) throw std::invalid_argument("config field 'horizon': must be >= 1");
  }
};

struct ResultRow {
  std::string campaign;
  std::string scheme;
  std::string family;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  long horizon = 0;
  double throughput = 0.0;
  std::vector<std::pair<std::string, std::string>> extra;

  bool operator==(const ResultRow&) const = default;
};

struct CampaignResult {
  std::vector<ResultRow> rows;
  bool ok = true;
};

// ---------------------------------------------------------------------------
// Emission.

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.campaign, a.scheme, a.family, a.epsilon, a.seed) <
           std::tie(b.campaign, b.scheme, b.family, b.epsilon, b.seed);
  });
}

}  // namespace detail

inline nlohmann::json rows_to_json(std::span<const ResultRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json extra = nlohmann::json::object();
    for (const auto& [k, v] : row.extra) extra[k] = v;
    arr.push_back({{"campaign", row.campaign},
                   {"scheme", row.scheme},
                   {"family", row.family},
                   {"epsilon", row.epsilon},
                   {"seed", row.seed},
                   {"horizon", row.horizon},
                   {"throughput", row.throughput},
                   {"extra", extra}});
  }
  return arr;
}

inline std::vector<ResultRow> rows_from_json(const nlohmann::json& arr) {
  std::vector<ResultRow> rows;
  for (const auto& j : arr) {
    ResultRow row;
    row.campaign = j.at("campaign").get<std::string>();
    row.scheme = j.at("scheme").get<std::string>();
    row.family = j.at("family").get<std::string>();
    row.epsilon = j.at("epsilon").get<double>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.horizon = j.at("horizon").get<long>();
    row.throughput = j.at("throughput").get<double>();
    for (const auto& [k, v] : j.at("extra").items()) row.extra.emplace_back(k, v.get<std::string>());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string rows_to_csv(std::span<const ResultRow> rows) {
  std::ostringstream os;
  os << "campaign,scheme,family,epsilon,seed,horizon,throughput\n";
  for (const auto& row : rows) {
    os << row.campaign << ',' << row.scheme << ',' << row.family << ','
       << detail::format_double(row.epsilon) << ',' << row.seed << ',' << row.horizon << ','
       << detail::format_double(row.throughput) << '\n';
  }
  return os.str();
}

inline void emit_results(std::span<const ResultRow> rows, OutputFormat format,
                         const std::filesystem::path& path) {
  if (rows.empty()) throw std::invalid_argument("emit_results: no rows to emit");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_results: cannot open " + path.string());
  if (format == OutputFormat::Csv) {
    os << rows_to_csv(rows);
  } else {
    os << rows_to_json(rows).dump(2) << '\n';
  }
  if (!os.good()) throw std::runtime_error("emit_results: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Config parsing (JSON file plus flag overrides handled by the CLI).

namespace detail {

inline CampaignKind parse_campaign(const std::string& s) {
  if (s == "solve-mdp") return CampaignKind::SolveMdp;
  if (s == "train-q") return CampaignKind::TrainQ;
  if (s == "simulate") return CampaignKind::Simulate;
  if (s == "sweep") return CampaignKind::Sweep;
  if (s == "hetero") return CampaignKind::Hetero;
  if (s == "validate") return CampaignKind::Validate;
  throw std::invalid_argument("config field 'campaign': unknown value '" + s + "'");
}

inline FamilyKind parse_family(const std::string& s) {
  if (s == "type1") return FamilyKind::Type1;
  if (s == "type2") return FamilyKind::Type2;
  throw std::invalid_argument("config field 'family': unknown value '" + s + "' (type1|type2)");
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw std::invalid_argument("config field 'format': unknown value '" + s + "' (csv|json)");
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* name, T& into) {
  if (!j.contains(name)) return;
  try {
    into = j.at(name).get<T>();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config field '") + name + "': " + e.what());
  }
}

inline void parse_mras(const nlohmann::json& j, MrasConfig& cfg) {
  maybe_get(j, "candidates", cfg.num_candidates);
  maybe_get(j, "elite_ratio", cfg.elite_ratio);
  maybe_get(j, "stop_sigma", cfg.stop_sigma);
  maybe_get(j, "max_iterations", cfg.max_iterations);
  maybe_get(j, "mu_init", cfg.mu_init);
  maybe_get(j, "sigma_init", cfg.sigma_init);
  cfg.validate();
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("campaign")) cfg.campaign = detail::parse_campaign(j.at("campaign").get<std::string>());
  detail::maybe_get(j, "m", cfg.m);
  detail::maybe_get(j, "n", cfg.n);
  if (j.contains("families")) {
    cfg.families.clear();
    for (const auto& f : j.at("families")) cfg.families.push_back(detail::parse_family(f.get<std::string>()));
  } else if (j.contains("family")) {
    cfg.families = {detail::parse_family(j.at("family").get<std::string>())};
  }
  if (j.contains("epsilons")) {
    detail::maybe_get(j, "epsilons", cfg.epsilons);
  } else if (j.contains("epsilon")) {
    double e = 1.0;
    detail::maybe_get(j, "epsilon", e);
    cfg.epsilons = {e};
  }
  detail::maybe_get(j, "schemes", cfg.schemes);
  if (j.contains("scheme")) cfg.schemes = {j.at("scheme").get<std::string>()};
  detail::maybe_get(j, "static_p_rec", cfg.static_p_rec);
  detail::maybe_get(j, "horizon", cfg.horizon);
  detail::maybe_get(j, "w", cfg.buffer_w);
  if (j.contains("seeds")) {
    detail::maybe_get(j, "seeds", cfg.seeds);
  } else if (j.contains("seed")) {
    std::uint64_t s = 1;
    detail::maybe_get(j, "seed", s);
    cfg.seeds = {s};
  }
  detail::maybe_get(j, "solve_seed", cfg.solve_seed);
  detail::maybe_get(j, "out", cfg.out);
  detail::maybe_get(j, "trace_out", cfg.trace_out);
  if (j.contains("format")) cfg.format = detail::parse_format(j.at("format").get<std::string>());
  if (j.contains("mras")) detail::parse_mras(j.at("mras"), cfg.mras);
  if (j.contains("qlearn")) {
    const auto& q = j.at("qlearn");
    detail::maybe_get(q, "alpha", cfg.qlearn.alpha0);
    detail::maybe_get(q, "tau", cfg.qlearn.tau);
    detail::maybe_get(q, "steps", cfg.qlearn.steps);
    detail::maybe_get(q, "discount", cfg.qlearn.discount);
    detail::maybe_get(q, "alpha_decay_slots", cfg.qlearn.alpha_decay_slots);
  }
  if (j.contains("hetero")) {
    const auto& h = j.at("hetero");
    detail::maybe_get(h, "rates", cfg.hetero_rates);
    detail::maybe_get(h, "orderings", cfg.hetero_orderings);
    detail::maybe_get(h, "eval_horizon", cfg.hetero_eval.horizon);
    detail::maybe_get(h, "eval_replications", cfg.hetero_eval.replications);
    detail::maybe_get(h, "solve_horizon", cfg.hetero_solve_eval.horizon);
    detail::maybe_get(h, "solve_replications", cfg.hetero_solve_eval.replications);
    if (h.contains("mras")) detail::parse_mras(h.at("mras"), cfg.hetero_mras);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig config_from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config file not readable: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("config file parse error: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Campaign execution.

namespace detail {

inline MdpModel make_model(const ExperimentConfig& cfg, FamilyKind fam, double eps) {
  return MdpModel(cfg.m, cfg.n, family_params(MatrixFamily{fam, eps}));
}

struct SolvedPolicies {
  // keyed by (family index, epsilon index)
  std::map<std::pair<int, int>, Policy> mras;
  std::map<std::pair<int, int>, Policy> qlearn;
};

inline Policy solve_mras_for(const ExperimentConfig& cfg, FamilyKind fam, double eps) {
  const auto model = make_model(cfg, fam, eps);
  RandomStream rng(derive_seed(cfg.solve_seed, 0x4d524153ULL, static_cast<std::uint64_t>(fam),
                               static_cast<std::uint64_t>(eps * 1000)));
  return mras_solve(model, cfg.mras, rng).first;
}

inline Policy train_q_for(const ExperimentConfig& cfg, FamilyKind fam, double eps) {
  const auto model = make_model(cfg, fam, eps);
  RandomStream rng(derive_seed(cfg.solve_seed, 0x514c4e00ULL, static_cast<std::uint64_t>(fam),
                               static_cast<std::uint64_t>(eps * 1000)));
  return train_q(model, cfg.qlearn, rng).greedy;
}

inline void write_policy_cache(const ExperimentConfig& cfg, FamilyKind fam, double eps,
                               const Policy& pol) {
  if (cfg.out.empty()) return;
  const auto dir = std::filesystem::path(cfg.out).parent_path();
  std::ostringstream name;
  name << "policy_" << family_name(fam) << "_eps" << format_double(eps) << ".json";
  const auto path = dir / name.str();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write policy cache " + path.string());
  os << policy_to_json(make_model(cfg, fam, eps), pol).dump(2) << '\n';
}

inline Scheme scheme_for(const ExperimentConfig& cfg, const std::string& name,
                         const SolvedPolicies& solved, int fi, int ei) {
  if (name == "random") return RandomScheme{};
  if (name == "static") return StaticScheme{cfg.static_p_rec};
  if (name == "heuristic") return HeuristicAdaptiveScheme{};
  if (name == "mras") return PolicyDrivenScheme{solved.mras.at({fi, ei})};
  if (name == "qlearn") return PolicyDrivenScheme{clamp_policy(solved.qlearn.at({fi, ei}))};
  throw std::invalid_argument("config field 'schemes': unknown scheme '" + name + "'");
}

inline CampaignResult run_sim_grid(const ExperimentConfig& cfg, const char* label) {
  SolvedPolicies solved;
  const bool want_mras =
      std::find(cfg.schemes.begin(), cfg.schemes.end(), "mras") != cfg.schemes.end();
  const bool want_q =
      std::find(cfg.schemes.begin(), cfg.schemes.end(), "qlearn") != cfg.schemes.end();
  for (int fi = 0; fi < static_cast<int>(cfg.families.size()); ++fi)
    for (int ei = 0; ei < static_cast<int>(cfg.epsilons.size()); ++ei) {
      if (want_mras) {
        auto pol = solve_mras_for(cfg, cfg.families[fi], cfg.epsilons[ei]);
        write_policy_cache(cfg, cfg.families[fi], cfg.epsilons[ei], pol);
        solved.mras[{fi, ei}] = std::move(pol);
      }
      if (want_q) solved.qlearn[{fi, ei}] = train_q_for(cfg, cfg.families[fi], cfg.epsilons[ei]);
    }

  struct Item {
    int fi, ei;
    std::string scheme;
    std::uint64_t seed;
  };
  std::vector<Item> items;
  for (int fi = 0; fi < static_cast<int>(cfg.families.size()); ++fi)
    for (int ei = 0; ei < static_cast<int>(cfg.epsilons.size()); ++ei)
      for (const auto& scheme : cfg.schemes)
        for (const auto seed : cfg.seeds) items.push_back({fi, ei, scheme, seed});

  if (!cfg.trace_out.empty() && items.size() != 1)
    throw std::invalid_argument(
        "config field 'trace_out': requires exactly one (family, epsilon, scheme, seed) item");

  std::vector<ResultRow> rows(items.size());
  parallel_for(static_cast<long>(items.size()), [&](long i) {
    const auto& item = items[i];
    SimConfig sim;
    sim.m_channels = cfg.m;
    sim.n_users = cfg.n;
    sim.horizon_t = cfg.horizon;
    sim.buffer_w = cfg.buffer_w;
    sim.scheme = scheme_for(cfg, item.scheme, solved, item.fi, item.ei);
    sim.seed = item.seed;
    sim.channels = homogeneous_channels(
        cfg.m, family_params(MatrixFamily{cfg.families[item.fi], cfg.epsilons[item.ei]}));
    sim.collect_trace = !cfg.trace_out.empty();
    const auto res = run_simulation(sim);
    ResultRow row;
    row.campaign = label;
    row.scheme = item.scheme;
    row.family = family_name(cfg.families[item.fi]);
    row.epsilon = cfg.epsilons[item.ei];
    row.seed = item.seed;
    row.horizon = cfg.horizon;
    row.throughput = res.avg_throughput;
    rows[i] = std::move(row);
    if (!cfg.trace_out.empty()) {
      std::ofstream os(cfg.trace_out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write trace " + cfg.trace_out);
      write_trace_csv(res.trace, os);
    }
  });
  sort_rows(rows);
  return {std::move(rows), true};
}

inline CampaignResult run_solve_mdp(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  for (const auto fam : cfg.families)
    for (const double eps : cfg.epsilons) {
      const auto model = make_model(cfg, fam, eps);
      RandomStream rng(derive_seed(cfg.solve_seed, 0x4d524153ULL, static_cast<std::uint64_t>(fam),
                                   static_cast<std::uint64_t>(eps * 1000)));
      auto [policy, trace] = mras_solve(model, cfg.mras, rng);
      write_policy_cache(cfg, fam, eps, policy);
      ResultRow row;
      row.campaign = campaign_name(CampaignKind::SolveMdp);
      row.scheme = "mras";
      row.family = family_name(fam);
      row.epsilon = eps;
      row.seed = cfg.solve_seed;
      row.horizon = 0;
      row.throughput = trace.phi_returned;
      row.extra.emplace_back("iterations", std::to_string(trace.iterations_used()));
      row.extra.emplace_back("converged", trace.converged ? "true" : "false");
      row.extra.emplace_back("max_sigma", format_double(trace.final_max_sigma));
      rows.push_back(std::move(row));
    }
  sort_rows(rows);
  return {std::move(rows), true};
}

inline CampaignResult run_train_q(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  for (const auto fam : cfg.families)
    for (const double eps : cfg.epsilons) {
      const auto model = make_model(cfg, fam, eps);
      RandomStream rng(derive_seed(cfg.solve_seed, 0x514c4e00ULL, static_cast<std::uint64_t>(fam),
                                   static_cast<std::uint64_t>(eps * 1000)));
      const auto result = train_q(model, cfg.qlearn, rng);
      if (!cfg.out.empty()) {
        const auto dir = std::filesystem::path(cfg.out).parent_path();
        std::ostringstream name;
        name << "qtable_" << family_name(fam) << "_eps" << format_double(eps) << ".csv";
        std::ofstream os(dir / name.str(), std::ios::binary);
        if (!os) throw std::runtime_error("cannot write qtable csv");
        write_qtable_csv(result.table, os);
      }
      ResultRow row;
      row.campaign = campaign_name(CampaignKind::TrainQ);
      row.scheme = "qlearn";
      row.family = family_name(fam);
      row.epsilon = eps;
      row.seed = cfg.solve_seed;
      row.horizon = cfg.qlearn.steps;
      row.throughput = policy_throughput(model, clamp_policy(result.greedy));
      std::ostringstream actions;
      for (std::size_t i = 0; i < result.greedy.p_rec.size(); ++i)
        actions << (i ? ";" : "") << format_double(result.greedy.p_rec[i]);
      row.extra.emplace_back("actions", actions.str());
      rows.push_back(std::move(row));
    }
  sort_rows(rows);
  return {std::move(rows), true};
}

inline HeteroModel hetero_scenario(const ExperimentConfig& cfg, const std::string& ordering,
                                   double eps) {
  std::vector<ChannelParams> chans;
  const int m = static_cast<int>(cfg.hetero_rates.size());
  for (int i = 0; i < m; ++i) {
    const bool first_half = i < m / 2;
    FamilyKind fam;
    if (ordering == "first") {
      fam = first_half ? FamilyKind::Type2 : FamilyKind::Type1;
    } else if (ordering == "second") {
      fam = first_half ? FamilyKind::Type1 : FamilyKind::Type2;
    } else {
      throw std::invalid_argument("config field 'hetero.orderings': unknown value '" + ordering +
                                  "' (first|second)");
    }
    chans.push_back(family_params(MatrixFamily{fam, eps}, cfg.hetero_rates[i]));
  }
  return HeteroModel(std::move(chans), cfg.n);
}

inline CampaignResult run_hetero(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  for (const auto& ordering : cfg.hetero_orderings)
    for (const double eps : cfg.epsilons) {
      const auto model = hetero_scenario(cfg, ordering, eps);
      const std::uint64_t base_seed = cfg.seeds.front();
      auto make_row = [&](const std::string& scheme, double tput) {
        ResultRow row;
        row.campaign = campaign_name(CampaignKind::Hetero);
        row.scheme = scheme;
        row.family = ordering;
        row.epsilon = eps;
        row.seed = base_seed;
        row.horizon = cfg.hetero_eval.horizon;
        row.throughput = tput;
        return row;
      };

      rows.push_back(make_row(
          "random", evaluate_scheme_stats(model, RandomScheme{}, cfg.hetero_eval, base_seed).first));

      double best_static = kNegInf;
      double best_p = 0.0;
      for (int i = 1; i <= 9; ++i) {
        const double p_rec = 0.1 * i;
        const double v =
            evaluate_scheme_stats(model, StaticScheme{p_rec}, cfg.hetero_eval, base_seed).first;
        if (v > best_static) {
          best_static = v;
          best_p = p_rec;
        }
      }
      auto static_row = make_row("static", best_static);
      static_row.extra.emplace_back("p_rec", format_double(best_p));
      rows.push_back(std::move(static_row));

      RandomStream rng(derive_seed(cfg.solve_seed, 0x48455431ULL,
                                   std::hash<std::string>{}(ordering),
                                   static_cast<std::uint64_t>(eps * 1000)));
      auto [policy, trace] = mras_solve_hetero(model, cfg.hetero_mras, cfg.hetero_solve_eval, rng);
      auto hetero_row = make_row(
          "hetero-mras", evaluate_hetero_stats(model, policy, cfg.hetero_eval, base_seed).first);
      hetero_row.extra.emplace_back("iterations", std::to_string(trace.iterations_used()));
      hetero_row.extra.emplace_back("converged", trace.converged ? "true" : "false");
      rows.push_back(std::move(hetero_row));

      if (!cfg.out.empty()) {
        const auto dir = std::filesystem::path(cfg.out).parent_path();
        std::ostringstream name;
        name << "hetero_policy_" << ordering << "_eps" << format_double(eps) << ".json";
        std::ofstream os(dir / name.str(), std::ios::binary);
        if (!os) throw std::runtime_error("cannot write hetero policy cache");
        os << hetero_policy_to_json(model, policy).dump(2) << '\n';
      }
    }
  sort_rows(rows);
  return {std::move(rows), true};
}

// Desk-scale validation suite: oracle triangle, recommended-channel load
// balance, saturation invariance and the reverse-CDF monotonicity grid.
inline CampaignResult run_validate(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  std::vector<ResultRow> rows;
  bool all_ok = true;
  auto report = [&](const std::string& check, bool ok, const std::string& detail) {
    ResultRow row;
    row.campaign = campaign_name(CampaignKind::Validate);
    row.scheme = check;
    row.family = "-";
    row.seed = cfg.seeds.front();
    row.throughput = ok ? 1.0 : 0.0;
    row.extra.emplace_back("pass", ok ? "true" : "false");
    row.extra.emplace_back("detail", detail);
    rows.push_back(std::move(row));
    all_ok = all_ok && ok;
    if (log) *log << (ok ? "[PASS] " : "[FAIL] ") << check << ": " << detail << '\n';
  };

  const std::uint64_t seed = cfg.seeds.front();

  {  // Oracle triangle: exact rows are stochastic and match the MC process.
    RandomStream rng(derive_seed(seed, 0x76616c31ULL));
    bool ok = true;
    double margin = 1e9;
    const long samples = 200000;
    for (int cse = 0; cse < 5 && ok; ++cse) {
      const int m = 2 + static_cast<int>(rng.below(19));
      const int n = 1 + static_cast<int>(rng.below(6));
      const double p = 0.05 + 0.9 * rng.next_double();
      const double q = 0.05 + 0.9 * rng.next_double();
      MdpModel model(m, n, ChannelParams(p, q, 1.0));
      const int r = static_cast<int>(rng.below(model.num_states()));
      const double a = 0.05 + 0.9 * rng.next_double();
      const auto row = transition_row(model, r, a, TransitionFormula::Exact);
      double sum = 0.0;
      for (double v : row) sum += v;
      if (std::abs(sum - 1.0) > 1e-12) ok = false;
      const auto mc = transition_prob_mc(model, r, a, samples, rng);
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double err = std::abs(row[j] - mc[j]);
        margin = std::min(margin, mc_tolerance(row[j], mc[j], samples) - err);
        if (margin < 0.0) ok = false;
      }
    }
    report("oracle-triangle", ok,
           "exact rows stochastic to 1e-12, MC agreement margin " + format_double(margin));
  }

  {  // Load balance: one expected user per recommended channel under r/N.
    SimConfig sim;
    sim.m_channels = cfg.m;
    sim.n_users = cfg.n;
    sim.horizon_t = 20000;
    sim.scheme = HeuristicAdaptiveScheme{};
    sim.seed = derive_seed(seed, 0x76616c32ULL);
    sim.channels = homogeneous_channels(cfg.m, family_params(MatrixFamily{FamilyKind::Type2, 1}));
    Simulator s(sim);
    std::vector<double> ratios;
    for (long t = 0; t < sim.horizon_t; ++t) {
      s.step();
      const auto& rec = s.recommended_channels();
      if (rec.empty()) continue;
      int on_rec = 0;
      for (int ch : s.chosen_channels())
        if (ch >= 0 && std::binary_search(rec.begin(), rec.end(), ch)) ++on_rec;
      ratios.push_back(static_cast<double>(on_rec) / static_cast<double>(rec.size()));
    }
    const double avg = mean(ratios);
    const double se = sample_se(ratios);
    const bool ok = std::abs(avg - 1.0) <= 3.0 * se && ratios.size() > 1000;
    report("load-balance", ok,
           "mean users per recommended channel " + format_double(avg) + " (3se " +
               format_double(3.0 * se) + ")");
  }

  {  // Saturation: MC rows at large N are action-independent and match the kernel.
    RandomStream rng(derive_seed(seed, 0x76616c33ULL));
    const int m = 4;
    const long samples = 30000;
    MdpModel model(m, 200, family_params(MatrixFamily{FamilyKind::Type2, 1}));
    bool ok = true;
    for (int r = 0; r <= m && ok; ++r) {
      const auto mc_lo = transition_prob_mc(model, r, 0.3, samples, rng);
      const auto mc_hi = transition_prob_mc(model, r, 0.7, samples, rng);
      const auto sat = saturation_row(m, r, model.channel.p, model.channel.q);
      for (int j = 0; j <= m; ++j) {
        if (std::abs(mc_lo[j] - mc_hi[j]) > mc_tolerance(sat[j], mc_lo[j], samples) +
                                                mc_tolerance(sat[j], mc_hi[j], samples))
          ok = false;
        if (std::abs(mc_lo[j] - sat[j]) > mc_tolerance(sat[j], mc_lo[j], samples)) ok = false;
      }
    }
    report("saturation", ok, "N=200 rows match the saturation kernel for p_rec 0.3 vs 0.7");
  }

  {  // Reverse-CDF monotonicity and supermodularity on the asymptotic kernel.
    bool ok = true;
    double worst = 0.0;
    for (int n = 2; n <= 5 && ok; ++n)
      for (double p : {0.2, 0.5, 0.8})
        for (double q : {0.2, 0.5, 0.8})
          for (double a = 0.1; a < 0.95; a += 0.2) {
            std::vector<std::vector<double>> revcdf(n + 1);
            for (int r = 0; r <= n; ++r) {
              const auto row = infinite_m_row(n, r, a, p, q);
              revcdf[r].assign(n + 1, 0.0);
              double acc = 0.0;
              for (int i = n; i >= 0; --i) {
                acc += row[i];
                revcdf[r][i] = acc;
              }
            }
            for (int r = 0; r + 1 <= n; ++r)
              for (int i = 0; i <= n; ++i)
                worst = std::min(worst, revcdf[r + 1][i] - revcdf[r][i]);
            if (worst < -1e-9) ok = false;
          }
    report("monotonicity", ok,
           "reverse-CDF nondecreasing in R; worst margin " + format_double(worst));
  }

  sort_rows(rows);
  return {std::move(rows), all_ok};
}

}  // namespace detail

inline CampaignResult run_campaign(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  switch (cfg.campaign) {
    case CampaignKind::SolveMdp: return detail::run_solve_mdp(cfg);
    case CampaignKind::TrainQ: return detail::run_train_q(cfg);
    case CampaignKind::Simulate: return detail::run_sim_grid(cfg, "simulate");
    case CampaignKind::Sweep: return detail::run_sim_grid(cfg, "sweep");
    case CampaignKind::Hetero: return detail::run_hetero(cfg);
    case CampaignKind::Validate: return detail::run_validate(cfg, log);
  }
  throw std::logic_error("run_campaign: unhandled campaign");
}

}  // namespace specrec
