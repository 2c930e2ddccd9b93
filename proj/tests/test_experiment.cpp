// Campaign configuration, result emission and determinism of the harness.
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "specrec/experiment.hpp"

using namespace specrec;

namespace {

ExperimentConfig tiny_sweep() {
  ExperimentConfig cfg;
  cfg.campaign = CampaignKind::Sweep;
  cfg.families = {FamilyKind::Type2};
  cfg.epsilons = {2.0};
  cfg.schemes = {"random", "static", "heuristic"};
  cfg.seeds = {1, 2, 3};
  cfg.horizon = 300;
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("CSV emission") {
  ResultRow row;
  row.campaign = "sweep";
  row.scheme = "static";
  row.family = "type2";
  row.epsilon = 2.5;
  row.seed = 7;
  row.horizon = 2000;
  row.throughput = 1.25;
  SUBCASE("one row gives header plus one line, fields in header order") {
    const auto text = rows_to_csv(std::vector<ResultRow>{row});
    CHECK(text == "campaign,scheme,family,epsilon,seed,horizon,throughput\n"
                  "sweep,static,type2,2.5,7,2000,1.25\n");
  }
  SUBCASE("emit writes a newline-terminated file") {
    const auto path = std::filesystem::temp_directory_path() / "specrec_emit_test.csv";
    emit_results(std::vector<ResultRow>{row}, OutputFormat::Csv, path);
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    CHECK(ss.str().back() == '\n');
    std::filesystem::remove(path);
  }
  SUBCASE("empty emission is an error") {
    CHECK_THROWS_AS(emit_results(std::vector<ResultRow>{}, OutputFormat::Csv, "x.csv"),
                    std::invalid_argument);
  }
  SUBCASE("unwritable path is an I/O error") {
    CHECK_THROWS_AS(
        emit_results(std::vector<ResultRow>{row}, OutputFormat::Csv, "/nonexistent/dir/x.csv"),
        std::runtime_error);
  }
}

TEST_CASE("JSON round trip reproduces rows exactly") {
  std::vector<ResultRow> rows(2);
  rows[0] = {"sweep", "mras", "type1", 4.0, 11, 2000, 1.2345678901234567, {{"note", "x"}}};
  rows[1] = {"sweep", "random", "type2", 0.5, 12, 1000, 0.3333333333333333, {}};
  const auto j = rows_to_json(rows);
  const auto parsed = nlohmann::json::parse(j.dump(2));
  const auto back = rows_from_json(parsed);
  CHECK(back == rows);
}

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto cfg = config_from_json(nlohmann::json::object());
    CHECK(cfg.m == 10);
    CHECK(cfg.n == 5);
    CHECK(cfg.epsilons.size() == 6);
    CHECK(cfg.static_p_rec == doctest::Approx(0.7));
  }
  SUBCASE("diagnostics name the offending field") {
    CHECK_THROWS_WITH_AS(config_from_json({{"campaign", "bogus"}}),
                         doctest::Contains("campaign"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(config_from_json({{"family", "typeX"}}), doctest::Contains("family"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(config_from_json({{"seeds", nlohmann::json::array()}}),
                         doctest::Contains("seeds"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(config_from_json({{"epsilons", {1.0, 5000.0}}}),
                         doctest::Contains("epsilon"), std::invalid_argument);
  }
  SUBCASE("singular overrides") {
    const auto cfg = config_from_json({{"epsilon", 3.0}, {"seed", 99}, {"scheme", "random"}});
    CHECK(cfg.epsilons == std::vector<double>{3.0});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{99});
    CHECK(cfg.schemes == std::vector<std::string>{"random"});
  }
}

TEST_CASE("sweep campaign emits one row per grid point with full provenance") {
  const auto cfg = tiny_sweep();
  const auto result = run_campaign(cfg);
  CHECK(result.ok);
  CHECK(result.rows.size() == 3 * 3);  // schemes x seeds
  for (const auto& row : result.rows) {
    CHECK(row.campaign == "sweep");
    CHECK(row.family == "type2");
    CHECK(row.epsilon == doctest::Approx(2.0));
    CHECK((row.seed == 1 || row.seed == 2 || row.seed == 3));
    CHECK(row.horizon == 300);
    CHECK(row.throughput >= 0.0);
  }
}

TEST_CASE("identical config produces byte-identical output") {
  const auto cfg = tiny_sweep();
  const auto a = run_campaign(cfg);
  const auto b = run_campaign(cfg);
  CHECK(rows_to_csv(a.rows) == rows_to_csv(b.rows));
  CHECK(rows_to_json(a.rows).dump() == rows_to_json(b.rows).dump());
}

TEST_CASE("unknown scheme is a config diagnostic") {
  auto cfg = tiny_sweep();
  cfg.schemes = {"warp-drive"};
  CHECK_THROWS_WITH_AS(run_campaign(cfg), doctest::Contains("schemes"), std::invalid_argument);
}

TEST_CASE("SPECREC_THREADS caps the job pool") {
  setenv("SPECREC_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  setenv("SPECREC_THREADS", "0", 1);  // nonsense values fall back to hardware
  CHECK(thread_budget() >= 1);
  unsetenv("SPECREC_THREADS");
  CHECK(thread_budget() >= 1);

  // the fan-out helper visits every index exactly once either way
  setenv("SPECREC_THREADS", "2", 1);
  std::vector<int> hits(101, 0);
  parallel_for(101, [&](long i) { hits[i] += 1; });
  unsetenv("SPECREC_THREADS");
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("validate campaign passes at desk scale") {
  ExperimentConfig cfg;
  cfg.campaign = CampaignKind::Validate;
  std::ostringstream log;
  const auto result = run_campaign(cfg, &log);
  CHECK(result.ok);
  CHECK(result.rows.size() == 4);
  CHECK(log.str().find("[PASS]") != std::string::npos);
  CHECK(log.str().find("[FAIL]") == std::string::npos);
}

TEST_CASE("solve campaign caches the policy JSON next to the results") {
  const auto dir = std::filesystem::temp_directory_path() / "specrec_solve_test";
  std::filesystem::create_directories(dir);
  ExperimentConfig cfg;
  cfg.campaign = CampaignKind::SolveMdp;
  cfg.families = {FamilyKind::Type2};
  cfg.epsilons = {1.0};
  cfg.m = 4;
  cfg.n = 2;
  cfg.mras = MrasConfig{60, 0.1, 1e-3, 120, 0.5, 0.5};
  cfg.out = (dir / "results.csv").string();
  const auto result = run_campaign(cfg);
  emit_results(result.rows, cfg.format, cfg.out);
  CHECK(std::filesystem::exists(dir / "policy_type2_eps1.json"));

  std::ifstream is(dir / "policy_type2_eps1.json");
  nlohmann::json j;
  is >> j;
  const auto [model, policy] = policy_from_json(j);
  CHECK(model.m_channels == 4);
  CHECK(policy.interior());
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
