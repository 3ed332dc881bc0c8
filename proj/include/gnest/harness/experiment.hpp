#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gnest/equilibrium.hpp"
#include "gnest/error.hpp"
#include "gnest/estimator.hpp"
#include "gnest/format.hpp"
#include "gnest/harness/config.hpp"
#include "gnest/piecewise.hpp"
#include "gnest/sampling.hpp"

namespace gnest::harness {

struct RunRecord {
  std::size_t n = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd eta_hat;
  double err_inf = std::numeric_limits<double>::quiet_NaN();
  double err_2 = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
  double l2_obs_vs_graphon = std::numeric_limits<double>::quiet_NaN();
  double hessian_min_eig = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  double wall_time_s = 0.0;
};

/// A sampled network, its equilibrium at eta_true, and the interpolated observation.
struct Observation {
  SampledNetwork network;
  NetworkEquilibrium equilibrium;
  PiecewiseConstant observed;
};

inline std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t n, std::size_t run) {
  return derive_seed(cfg.master_seed, run, n);
}

inline Observation simulate_observation(const ExperimentConfig& cfg, std::size_t n, std::size_t run) {
  SampledNetwork net = sample_network(cfg.graphon, n, run_seed(cfg, n, run));
  NetworkEquilibrium eq = solve_network_game(net, cfg.game, cfg.eta_true, cfg.solver);
  PiecewiseConstant obs = observe(net, eq);
  return Observation{std::move(net), std::move(eq), std::move(obs)};
}

/// Graphon equilibrium at eta_true.
inline PiecewiseConstant true_equilibrium(const ExperimentConfig& cfg) {
  return solve_fixed_point(cfg.graphon, cfg.game, cfg.eta_true, cfg.solver).strategy;
}

/// Sample -> solve -> observe -> estimate for one (N, run) pair. Failures
/// produce a non-converged record with NaN estimates rather than throwing.
inline RunRecord run_once(const ExperimentConfig& cfg, const PiecewiseConstant& truth, std::size_t n,
                          std::size_t run) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.n = n;
  rec.run = run;
  rec.seed = run_seed(cfg, n, run);
  rec.eta_hat = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.game.dimension()),
                                          std::numeric_limits<double>::quiet_NaN());
  try {
    const Observation obs = simulate_observation(cfg, n, run);
    rec.l2_obs_vs_graphon = l2_distance(obs.observed, truth);
    const EstimationResult est = estimate(obs.observed, cfg.graphon, cfg.game, cfg.optimizer);
    const Eigen::Map<const Eigen::VectorXd> bar(cfg.eta_true.data(), static_cast<Eigen::Index>(cfg.eta_true.size()));
    rec.eta_hat = est.eta_hat;
    rec.err_inf = (est.eta_hat - bar).cwiseAbs().maxCoeff();
    rec.err_2 = (est.eta_hat - bar).norm();
    rec.objective = est.objective;
    rec.hessian_min_eig = est.hessian_min_eig;
    rec.converged = est.converged;
  } catch (const Error&) {
    rec.converged = false;
  }
  if (cfg.record_wall_time)
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Runs every (N, run) pair, ordered by ascending N then run index. Seeds are
/// derived per pair, so the records do not depend on the thread count.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0) {
  if (const auto issues = config_violations(cfg); !issues.empty()) throw Error(Errc::config, issues.front());
  std::vector<std::size_t> ns = cfg.n_list;
  std::sort(ns.begin(), ns.end());
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t n : ns)
    for (std::size_t r = 0; r < cfg.runs_per_n; ++r) jobs.emplace_back(n, r);
  std::vector<RunRecord> records(jobs.size());
  if (jobs.empty()) return records;

  const PiecewiseConstant truth = true_equilibrium(cfg);
  if (threads == 0) threads = std::max<std::size_t>(1, cfg.threads);
  threads = std::min(threads, jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++)
      records[k] = run_once(cfg, truth, jobs[k].first, jobs[k].second);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return records;
}

inline void write_runs_csv(const std::vector<RunRecord>& records, std::size_t dim, std::ostream& out) {
  out << "N,run,seed";
  for (std::size_t i = 1; i <= dim; ++i) out << ",eta_hat_" << i;
  out << ",err_inf,err_2,objective,l2_obs_vs_graphon,hessian_min_eig,converged,wall_time_s\n";
  for (const RunRecord& r : records) {
    out << r.n << ',' << r.run << ',' << r.seed;
    for (Eigen::Index i = 0; i < r.eta_hat.size(); ++i) out << ',' << format_double(r.eta_hat[i]);
    out << ',' << format_double(r.err_inf) << ',' << format_double(r.err_2) << ',' << format_double(r.objective)
        << ',' << format_double(r.l2_obs_vs_graphon) << ',' << format_double(r.hessian_min_eig) << ','
        << (r.converged ? 1 : 0) << ',' << format_double(r.wall_time_s) << '\n';
  }
}

/// Inclusive linear-interpolation quantile of a non-empty sample:
/// h = (n - 1) p, q = x_(floor h) + (h - floor h)(x_(floor h + 1) - x_(floor h)).
inline double quantile_inclusive(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::empty_group, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct QuantileRow {
  std::size_t n = 0;
  std::string metric;
  double quantile = 0.0;
  double value = 0.0;
};

/// Per-N quantiles of every eta_hat coordinate and of err_inf. Non-finite
/// entries (failed runs) are skipped.
inline std::vector<QuantileRow> summarize_quantiles(const std::vector<RunRecord>& records,
                                                    const std::vector<double>& quantiles) {
  std::map<std::size_t, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : records) groups[r.n].push_back(&r);
  std::vector<QuantileRow> rows;
  for (const auto& [n, group] : groups) {
    const Eigen::Index dim = group.front()->eta_hat.size();
    auto emit = [&](const std::string& metric, auto&& pick) {
      std::vector<double> v;
      for (const RunRecord* r : group) {
        const double x = pick(*r);
        if (std::isfinite(x)) v.push_back(x);
      }
      if (v.empty()) throw Error(Errc::empty_group, "no finite " + metric + " values for N = " + std::to_string(n));
      for (double q : quantiles) rows.push_back({n, metric, q, quantile_inclusive(v, q)});
    };
    for (Eigen::Index i = 0; i < dim; ++i)
      emit("eta_hat_" + std::to_string(i + 1), [i](const RunRecord& r) { return r.eta_hat[i]; });
    emit("err_inf", [](const RunRecord& r) { return r.err_inf; });
  }
  return rows;
}

inline void write_quantiles_csv(const std::vector<QuantileRow>& rows, std::ostream& out) {
  out << "# inclusive linear interpolation: h = (n-1)p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h])\n";
  out << "N,metric,quantile,value\n";
  for (const QuantileRow& r : rows)
    out << r.n << ',' << r.metric << ',' << format_double(r.quantile) << ',' << format_double(r.value) << '\n';
}

/// Median of a metric per N, in ascending N.
template <class Pick>
std::vector<std::pair<std::size_t, double>> median_by_n(const std::vector<RunRecord>& records, Pick&& pick) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const RunRecord& r : records) groups[r.n].push_back(pick(r));
  std::vector<std::pair<std::size_t, double>> out;
  for (auto& [n, v] : groups) out.emplace_back(n, quantile_inclusive(v, 0.5));
  return out;
}

}  // namespace gnest::harness
