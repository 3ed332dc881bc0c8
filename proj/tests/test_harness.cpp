#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gnest/harness/config.hpp"
#include "gnest/harness/experiment.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using gnest::Errc;
namespace hs = gnest::harness;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const gnest::Error& e) {
    return e.code();
  }
  FAIL("expected gnest::Error");
  return Errc::config;
}

hs::json small_config() {
  return hs::json::parse(R"({
    "graphon": {"type": "sbm", "Q": [[0.7, 0.1], [0.1, 0.5]], "pi": [0.4, 0.6]},
    "game": {"type": "lq_sbm", "theta1": 1.0},
    "eta_true": [0.9, 0.7],
    "experiment": {"N_list": [60, 30], "runs_per_N": 3, "master_seed": 11}
  })");
}

}  // namespace

TEST_CASE("config defaults") {
  const auto cfg = hs::parse_config(small_config());
  CHECK(cfg.game.dimension() == 2);
  CHECK(cfg.game.strategy_set().lower == 0.0);
  CHECK(cfg.game.strategy_set().upper == 10.0);
  CHECK(cfg.game.xi().lower() == std::vector<double>{0.01, 0.01});
  CHECK(cfg.game.xi().upper() == std::vector<double>{1.2, 1.2});
  CHECK(cfg.quantiles == std::vector<double>{0.1, 0.25, 0.5, 0.75, 0.9});
  CHECK(cfg.output == "results.csv");
  CHECK(cfg.optimizer.starts == 8);
  CHECK(hs::config_violations(cfg).empty());
}

TEST_CASE("config errors") {
  auto j = small_config();
  j["graphon"]["type"] = "lattice";
  CHECK(code_of([&] { hs::parse_config(j); }) == Errc::config);
  j = small_config();
  j.erase("eta_true");
  CHECK(code_of([&] { hs::parse_config(j); }) == Errc::config);
  j = small_config();
  j["game"]["strategy_set"] = {1.0};
  CHECK(code_of([&] { hs::parse_config(j); }) == Errc::config);
  j = small_config();
  j["graphon"]["pi"] = {0.4, 0.0};
  CHECK(code_of([&] { hs::parse_config(j); }) == Errc::config);
  CHECK(code_of([] { hs::load_config("/nonexistent/config.json"); }) == Errc::config);
}

TEST_CASE("config invariant violations") {
  auto j = small_config();
  j["eta_true"] = {0.9, 1.2};
  CHECK_FALSE(hs::config_violations(hs::parse_config(j)).empty());
  j = small_config();
  j["game"]["xi"] = {{"lower", {0.1, 0.1}}, {"upper", {3.5, 3.5}}};
  const auto issues = hs::config_violations(hs::parse_config(j));
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("contraction margin") != std::string::npos);
  j = small_config();
  j["experiment"]["N_list"] = {50, 50};
  CHECK_FALSE(hs::config_violations(hs::parse_config(j)).empty());
  j = small_config();
  j["graphon"]["Q"] = {{0.7, 0.2}, {0.1, 0.5}};
  CHECK_FALSE(hs::config_violations(hs::parse_config(j)).empty());
}

TEST_CASE("inclusive quantiles match hand-computed type-7 values") {
  const std::vector<double> v{3.0, 1.0, 4.0, 1.0, 5.0};
  // sorted: 1 1 3 4 5; h = 4p
  CHECK(hs::quantile_inclusive(v, 0.0) == 1.0);
  CHECK(hs::quantile_inclusive(v, 0.5) == 3.0);
  CHECK(hs::quantile_inclusive(v, 1.0) == 5.0);
  CHECK_THAT(hs::quantile_inclusive(v, 0.1), WithinAbs(1.0, 1e-15));
  CHECK_THAT(hs::quantile_inclusive(v, 0.6), WithinAbs(3.4, 1e-15));
  CHECK_THAT(hs::quantile_inclusive(v, 0.9), WithinAbs(4.6, 1e-15));
  CHECK(code_of([] { hs::quantile_inclusive({}, 0.5); }) == Errc::empty_group);
}

TEST_CASE("experiment produces one sorted record per (N, run)") {
  auto cfg = hs::parse_config(small_config());
  const auto recs = hs::run_experiment(cfg);
  REQUIRE(recs.size() == 6);
  CHECK(recs[0].n == 30);
  CHECK(recs[2].run == 2);
  CHECK(recs[3].n == 60);
  for (const auto& r : recs) {
    CHECK(r.converged);
    CHECK(r.seed == gnest::derive_seed(11, r.run, r.n));
    CHECK(std::isfinite(r.err_inf));
    CHECK(r.err_2 >= r.err_inf);
    CHECK(r.wall_time_s == 0.0);
  }
  cfg.runs_per_n = 0;
  CHECK(hs::run_experiment(cfg).empty());
}

TEST_CASE("records do not depend on the thread count") {
  const auto cfg = hs::parse_config(small_config());
  std::ostringstream a, b;
  hs::write_runs_csv(hs::run_experiment(cfg, 1), 2, a);
  hs::write_runs_csv(hs::run_experiment(cfg, 3), 2, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("N,run,seed,eta_hat_1,eta_hat_2,err_inf,err_2,objective,l2_obs_vs_graphon,"
                      "hessian_min_eig,converged,wall_time_s\n",
                      0) == 0);
}

TEST_CASE("quantile summary covers every coordinate and err_inf") {
  const auto cfg = hs::parse_config(small_config());
  const auto recs = hs::run_experiment(cfg);
  const auto rows = hs::summarize_quantiles(recs, {0.5});
  REQUIRE(rows.size() == 2 * 3);
  CHECK(rows[0].n == 30);
  CHECK(rows[0].metric == "eta_hat_1");
  CHECK(rows[2].metric == "err_inf");
  std::ostringstream out;
  hs::write_quantiles_csv(rows, out);
  CHECK(out.str().find("N,metric,quantile,value\n") != std::string::npos);
  const auto med = hs::median_by_n(recs, [](const hs::RunRecord& r) { return r.err_inf; });
  REQUIRE(med.size() == 2);
  CHECK(med[0].second == rows[2].value);
}

TEST_CASE("failed runs are kept as non-converged rows") {
  auto cfg = hs::parse_config(small_config());
  const auto truth = hs::true_equilibrium(cfg);
  cfg.solver.max_iter = 1;
  const auto rec = hs::run_once(cfg, truth, 30, 0);
  CHECK_FALSE(rec.converged);
  CHECK(std::isnan(rec.err_inf));
  CHECK(rec.eta_hat.size() == 2);
  CHECK(code_of([&] { hs::summarize_quantiles({rec}, {0.5}); }) == Errc::empty_group);
}
