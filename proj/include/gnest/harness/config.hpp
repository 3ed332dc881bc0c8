#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gnest/equilibrium.hpp"
#include "gnest/error.hpp"
#include "gnest/estimator.hpp"
#include "gnest/game.hpp"
#include "gnest/graphon.hpp"

namespace gnest::harness {

using nlohmann::json;

/// Everything needed to reproduce one Monte Carlo convergence study.
/// The JSON schema is documented in docs/config.md.
struct ExperimentConfig {
  Graphon graphon;
  GameSpec game;
  std::vector<double> eta_true{};
  std::vector<std::size_t> n_list{};
  std::size_t runs_per_n = 20;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  bool record_wall_time = false;
  SolverOptions solver{};
  OptimizerOptions optimizer{};
  std::vector<double> quantiles{};
  std::string output{};
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw Error(Errc::config, what); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string("field '") + key + "': " + e.what());
  }
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != k) fail("matrix Q must be square");
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline Graphon parse_graphon(const json& j, const std::filesystem::path& base) {
  const auto type = require<std::string>(j, "type");
  try {
    if (type == "constant") return Graphon::constant(require<double>(j, "c"));
    if (type == "sbm")
      return Graphon::sbm(to_matrix(require<std::vector<std::vector<double>>>(j, "Q")),
                          to_vector(require<std::vector<double>>(j, "pi")));
    if (type == "grid") {
      std::filesystem::path p = require<std::string>(j, "csv");
      if (p.is_relative()) p = base / p;
      return load_grid_csv(p.string());
    }
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    fail(std::string("graphon: ") + e.what());
  }
  fail("unknown graphon type '" + type + "'");
}

inline GameSpec parse_game(const json& j, const Graphon& g) {
  const auto type = require<std::string>(j, "type");
  const auto bounds = get_or<std::vector<double>>(j, "strategy_set", {0.0, 10.0});
  if (bounds.size() != 2) fail("strategy_set must be [lower, upper]");
  try {
    const StrategySet s = StrategySet::make(bounds[0], bounds[1]);
    Eigen::VectorXd pi;
    std::size_t dim = 2;
    if (type == "lq_sbm") {
      if (j.contains("pi"))
        pi = to_vector(require<std::vector<double>>(j, "pi"));
      else if (const auto* sbm = std::get_if<SbmKernel>(&g.kernel()))
        pi = sbm->pi;
      else
        fail("lq_sbm game on a non-SBM graphon needs 'pi'");
      dim = static_cast<std::size_t>(pi.size());
    } else if (type != "lq_homogeneous") {
      fail("unknown game type '" + type + "'");
    }
    std::vector<double> lo(dim, 0.01), hi(dim, 1.2);
    if (j.contains("xi")) {
      lo = require<std::vector<double>>(j.at("xi"), "lower");
      hi = require<std::vector<double>>(j.at("xi"), "upper");
    }
    ParameterBox xi = ParameterBox::make(std::move(lo), std::move(hi));
    if (type == "lq_sbm") return GameSpec::lq_sbm(require<double>(j, "theta1"), pi, s, std::move(xi));
    return GameSpec::lq_homogeneous(s, std::move(xi));
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    fail(std::string("game: ") + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base = ".") {
  if (!j.is_object()) detail::fail("config must be a JSON object");
  Graphon g = detail::parse_graphon(j.contains("graphon") ? j.at("graphon") : json(), base);
  GameSpec game = detail::parse_game(j.contains("game") ? j.at("game") : json(), g);
  ExperimentConfig cfg{std::move(g), std::move(game)};
  cfg.eta_true = detail::require<std::vector<double>>(j, "eta_true");

  const json ex = j.contains("experiment") ? j.at("experiment") : json::object();
  cfg.n_list = detail::get_or<std::vector<std::size_t>>(ex, "N_list", {100, 400, 1600});
  cfg.runs_per_n = detail::get_or<std::size_t>(ex, "runs_per_N", 20);
  cfg.master_seed = detail::get_or<std::uint64_t>(ex, "master_seed", 0);
  cfg.threads = detail::get_or<std::size_t>(ex, "threads", 1);
  cfg.record_wall_time = detail::get_or<bool>(ex, "record_wall_time", false);

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    cfg.solver.tol = detail::get_or<double>(s, "tol", cfg.solver.tol);
    cfg.solver.max_iter = detail::get_or<std::size_t>(s, "max_iter", cfg.solver.max_iter);
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    OptimizerOptions& opt = cfg.optimizer;
    opt.armijo_c = detail::get_or<double>(o, "armijo_c", opt.armijo_c);
    opt.shrink = detail::get_or<double>(o, "shrink", opt.shrink);
    opt.initial_step = detail::get_or<double>(o, "initial_step", opt.initial_step);
    opt.gtol = detail::get_or<double>(o, "gtol", opt.gtol);
    opt.max_iter = detail::get_or<std::size_t>(o, "max_iter", opt.max_iter);
    opt.starts = detail::get_or<std::size_t>(o, "starts", opt.starts);
    opt.spectral_buffer = detail::get_or<double>(o, "spectral_buffer", opt.spectral_buffer);
    opt.spectral_step = detail::get_or<bool>(o, "spectral_step", opt.spectral_step);
  }
  cfg.quantiles = detail::get_or<std::vector<double>>(j, "quantiles", {0.1, 0.25, 0.5, 0.75, 0.9});
  cfg.output = detail::get_or<std::string>(j, "output", "results.csv");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) detail::fail("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    detail::fail("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

/// Invariant violations of a parsed config; empty when it can be run.
inline std::vector<std::string> config_violations(const ExperimentConfig& cfg) {
  std::vector<std::string> issues;
  for (const std::string& s : validate(cfg.graphon)) issues.push_back("graphon: " + s);
  if (cfg.eta_true.size() != cfg.game.dimension()) {
    issues.emplace_back("eta_true has the wrong dimension");
  } else if (!cfg.game.xi().contains_in_interior(cfg.eta_true)) {
    issues.emplace_back("eta_true must lie in the interior of xi");
  }
  if (cfg.game.kind() == GameSpec::Kind::lq_sbm) {
    if (const auto* sbm = std::get_if<SbmKernel>(&cfg.graphon.kernel())) {
      if (sbm->pi.size() != cfg.game.community_weights().size() ||
          (sbm->pi - cfg.game.community_weights()).cwiseAbs().maxCoeff() > 1e-12)
        issues.emplace_back("game community weights differ from the graphon's pi");
    }
    if (std::abs(cfg.game.community_weights().sum() - 1.0) > 1e-12)
      issues.emplace_back("game community weights are not a simplex");
  }
  if (issues.empty()) {
    const double margin = contraction_margin(cfg.game, cfg.graphon);
    if (!(margin > 0.0)) issues.push_back("contraction margin over xi is not positive (" + std::to_string(margin) + ")");
  }
  std::vector<std::size_t> ns = cfg.n_list;
  std::sort(ns.begin(), ns.end());
  if (std::adjacent_find(ns.begin(), ns.end()) != ns.end()) issues.emplace_back("N_list has duplicates");
  if (!ns.empty() && ns.front() == 0) issues.emplace_back("N_list entries must be positive");
  for (double q : cfg.quantiles)
    if (!(q >= 0.0 && q <= 1.0)) issues.emplace_back("quantiles must lie in [0,1]");
  if (!(cfg.solver.tol > 0.0)) issues.emplace_back("solver tol must be positive");
  if (!(cfg.optimizer.gtol > 0.0)) issues.emplace_back("optimizer gtol must be positive");
  if (!(cfg.optimizer.shrink > 0.0 && cfg.optimizer.shrink < 1.0)) issues.emplace_back("optimizer shrink must lie in (0,1)");
  return issues;
}

}  // namespace gnest::harness
