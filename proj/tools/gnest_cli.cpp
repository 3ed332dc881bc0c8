// graphon-est: command-line driver for equilibrium computation, sampling,
// parameter estimation and the Monte Carlo convergence study.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnest/gnest.hpp"
#include "gnest/harness/config.hpp"
#include "gnest/harness/experiment.hpp"

namespace {

using gnest::Errc;
using gnest::Error;
using gnest::format_double;
using nlohmann::ordered_json;
namespace hs = gnest::harness;

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_numerical = 2;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::io:
    case Errc::invalid_graphon:
    case Errc::invalid_game:
    case Errc::parameter_out_of_box:
    case Errc::malformed_partition:
    case Errc::empty_vector:
      return exit_config;
    default:
      return exit_numerical;
  }
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

hs::ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw Error(Errc::config, "--config is required");
  hs::ExperimentConfig cfg = hs::load_config(g.config);
  if (g.seed) cfg.master_seed = *g.seed;
  return cfg;
}

/// Writes to --out when given, otherwise stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(Errc::io, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> read_observation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open observation file " + path);
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      v.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw Error(Errc::io, "bad observation line '" + line + "'");
    }
  }
  return v;
}

ordered_json to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json to_json(const gnest::IdentifiabilityReport& rep) {
  ordered_json j;
  j["verdict"] = rep.identifiable ? "identifiable" : "non-identifiable";
  j["identifiable"] = rep.identifiable;
  j["constant"] = rep.constant ? ordered_json(*rep.constant) : ordered_json(nullptr);
  j["gamma"] = rep.gamma ? ordered_json(*rep.gamma) : ordered_json(nullptr);
  if (const auto* h = std::get_if<gnest::HomogeneousDetail>(&rep.detail)) {
    j["lambda_m"] = h->lambda_m;
    j["nu_bar"] = h->nu_bar;
    j["aggregate_spread"] = h->aggregate_spread;
  } else {
    const auto& s = std::get<gnest::SbmDetail>(rep.detail);
    j["min_aggregate"] = s.min_aggregate;
    j["min_weight"] = s.min_weight;
  }
  return j;
}

int cmd_validate(const Globals& g) {
  const hs::ExperimentConfig cfg = load(g);
  const auto issues = hs::config_violations(cfg);
  for (const std::string& s : issues) std::cerr << "violation: " << s << '\n';
  if (!issues.empty()) return exit_config;
  std::cout << "ok: contraction margin " << format_double(gnest::contraction_margin(cfg.game, cfg.graphon)) << '\n';
  return exit_ok;
}

int cmd_solve(const Globals& g, const std::vector<double>& eta_arg, std::size_t grid) {
  const hs::ExperimentConfig cfg = load(g);
  const std::vector<double> eta = eta_arg.empty() ? cfg.eta_true : eta_arg;
  if (!cfg.game.xi().contains(eta)) throw Error(Errc::parameter_out_of_box, "eta is outside the parameter box");
  const gnest::GraphonEquilibrium eq = gnest::solve_fixed_point(cfg.graphon, cfg.game, eta, cfg.solver);
  Output out(g.out);
  std::ostream& os = out.stream();
  if (grid > 0) {
    for (std::size_t i = 0; i < grid; ++i)
      os << format_double(eq.strategy((static_cast<double>(i) + 0.5) / static_cast<double>(grid))) << '\n';
    return exit_ok;
  }
  os << "left,right,strategy,aggregate\n";
  const auto& b = eq.strategy.breakpoints();
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    const double mid = 0.5 * (b[j] + b[j + 1]);
    os << format_double(b[j]) << ',' << format_double(b[j + 1]) << ',' << format_double(eq.strategy.values()[j])
       << ',' << format_double(eq.aggregate(mid)) << '\n';
  }
  std::cerr << "iterations " << eq.iterations << ", residual " << format_double(eq.residual) << ", interior "
            << (eq.interior ? "yes" : "no") << '\n';
  return exit_ok;
}

int cmd_sample(const Globals& g, std::size_t n, std::size_t run) {
  const hs::ExperimentConfig cfg = load(g);
  if (n == 0) n = cfg.n_list.empty() ? 100 : cfg.n_list.front();
  const hs::Observation obs = hs::simulate_observation(cfg, n, run);
  const std::string prefix = g.out.empty() ? "network" : g.out;
  std::ofstream edges(prefix + ".edges", std::ios::binary), labels(prefix + ".labels", std::ios::binary),
      observation(prefix + ".observation", std::ios::binary);
  if (!edges || !labels || !observation) throw Error(Errc::io, "cannot write files with prefix " + prefix);
  gnest::write_edge_list(obs.network, edges);
  gnest::write_labels(obs.network, labels);
  for (Eigen::Index i = 0; i < obs.equilibrium.strategies.size(); ++i)
    observation << format_double(obs.equilibrium.strategies[i]) << '\n';
  std::cout << "N " << n << ", seed " << obs.network.seed() << ", edges " << obs.network.edge_count() << '\n';
  return exit_ok;
}

int cmd_estimate(const Globals& g, const std::string& observation_path, std::size_t n, std::size_t run) {
  const hs::ExperimentConfig cfg = load(g);
  if (const auto issues = hs::config_violations(cfg); !issues.empty()) throw Error(Errc::config, issues.front());
  std::optional<gnest::PiecewiseConstant> observed;
  if (!observation_path.empty()) {
    observed = gnest::interpolate_equilibrium(read_observation(observation_path));
  } else {
    if (n == 0) n = cfg.n_list.empty() ? 100 : cfg.n_list.front();
    observed = hs::simulate_observation(cfg, n, run).observed;
  }
  const gnest::EstimationResult est = gnest::estimate(*observed, cfg.graphon, cfg.game, cfg.optimizer);
  const Eigen::Map<const Eigen::VectorXd> bar(cfg.eta_true.data(), static_cast<Eigen::Index>(cfg.eta_true.size()));
  ordered_json j;
  j["eta_hat"] = to_json(est.eta_hat);
  j["eta_true"] = cfg.eta_true;
  j["err_inf"] = (est.eta_hat - bar).cwiseAbs().maxCoeff();
  j["objective"] = est.objective;
  j["gradient_norm"] = est.gradient_norm;
  j["hessian_min_eig"] = std::isfinite(est.hessian_min_eig) ? ordered_json(est.hessian_min_eig) : ordered_json(nullptr);
  j["starts"] = est.starts;
  j["iterations_total"] = est.iterations_total;
  j["converged"] = est.converged;
  Output out(g.out);
  out.stream() << j.dump(2) << '\n';
  return est.converged ? exit_ok : exit_numerical;
}

int cmd_experiment(const Globals& g, std::string quantiles_out, std::size_t threads) {
  const hs::ExperimentConfig cfg = load(g);
  const std::string csv = g.out.empty() ? cfg.output : g.out;
  if (quantiles_out.empty()) {
    std::filesystem::path p(csv);
    quantiles_out = (p.parent_path() / (p.stem().string() + "_quantiles.csv")).string();
  }
  const std::vector<hs::RunRecord> records = hs::run_experiment(cfg, threads);
  {
    Output out(csv);
    hs::write_runs_csv(records, cfg.game.dimension(), out.stream());
  }
  if (!records.empty()) {
    Output out(quantiles_out);
    hs::write_quantiles_csv(hs::summarize_quantiles(records, cfg.quantiles), out.stream());
  }
  std::size_t converged = 0;
  for (const auto& r : records) converged += r.converged;
  std::cerr << records.size() << " runs, " << converged << " converged; wrote " << csv << '\n';
  return exit_ok;
}

int cmd_diagnose(const Globals& g) {
  const hs::ExperimentConfig cfg = load(g);
  ordered_json j;
  j["lambda_max"] = gnest::lambda_max(cfg.graphon);
  j["sup_degree"] = gnest::sup_degree(cfg.graphon);
  j["contraction_margin"] = gnest::contraction_margin(cfg.game, cfg.graphon);
  const gnest::GraphonEquilibrium eq = gnest::solve_fixed_point(cfg.graphon, cfg.game, cfg.eta_true, cfg.solver);
  j["interior"] = gnest::check_interior(eq, cfg.game.strategy_set());
  if (cfg.game.kind() == gnest::GameSpec::Kind::lq_homogeneous) {
    j["identifiability"] = to_json(gnest::homogeneous_identifiability(cfg.graphon, cfg.eta_true));
  } else if (const auto* sbm = std::get_if<gnest::SbmKernel>(&cfg.graphon.kernel())) {
    const Eigen::Map<const Eigen::VectorXd> bar(cfg.eta_true.data(), static_cast<Eigen::Index>(cfg.eta_true.size()));
    const gnest::IdentifiabilityReport rep =
        gnest::sbm_identifiability_constant(sbm->q, sbm->pi, cfg.game.theta1(), bar);
    j["identifiability"] = to_json(rep);
    j["identifiability"]["empirical_violations"] = gnest::empirical_identifiability_test(
        cfg.graphon, cfg.game, cfg.eta_true, *rep.constant, 100, cfg.master_seed);
    j["identifiability"]["empirical_samples"] = 100;
  } else {
    j["identifiability"] = nullptr;
  }
  Output out(g.out);
  out.stream() << j.dump(2) << '\n';
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graphon game equilibria and payoff-parameter estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Experiment configuration (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", g.out, "Output path (file, or prefix for `sample`)");

  auto* validate = app.add_subcommand("validate", "Check the configuration and graphon");

  std::vector<double> eta;
  std::size_t grid = 0;
  auto* solve = app.add_subcommand("solve", "Graphon equilibrium at eta (default eta_true)");
  solve->add_option("--eta", eta, "Parameter vector")->delimiter(',');
  solve->add_option("--observation-grid", grid, "Write the equilibrium as an N-point observation file");

  std::size_t n = 0, run = 0;
  auto* sample = app.add_subcommand("sample", "Sample a network and write <out>.edges/.labels/.observation");
  sample->add_option("--n", n, "Number of agents (default: first of N_list)");
  sample->add_option("--run", run, "Run index used to derive the seed");

  std::string observation;
  auto* est = app.add_subcommand("estimate", "Estimate eta from an observation file or a fresh sample");
  est->add_option("--observation", observation, "One strategy per line on the regular grid");
  est->add_option("--n", n, "Sample size when no observation file is given");
  est->add_option("--run", run, "Run index used to derive the seed");

  std::string quantiles_out;
  std::size_t threads = 0;
  auto* exp = app.add_subcommand("experiment", "Full Monte Carlo convergence study");
  exp->add_option("--quantiles-out", quantiles_out, "Quantile summary CSV");
  exp->add_option("--threads", threads, "Worker threads (default from config)");

  auto* diagnose = app.add_subcommand("diagnose", "Identifiability and contraction report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*validate) return cmd_validate(g);
    if (*solve) return cmd_solve(g, eta, grid);
    if (*sample) return cmd_sample(g, n, run);
    if (*est) return cmd_estimate(g, observation, n, run);
    if (*exp) return cmd_experiment(g, quantiles_out, threads);
    if (*diagnose) return cmd_diagnose(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  return exit_config;
}
