#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gnest/equilibrium.hpp"
#include "gnest/error.hpp"
#include "gnest/format.hpp"
#include "gnest/game.hpp"
#include "gnest/graphon.hpp"
#include "gnest/linalg.hpp"
#include "gnest/piecewise.hpp"

namespace gnest {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of one Monte Carlo run:
///   splitmix64(splitmix64(splitmix64(master) ^ run) ^ n).
/// Independent of scheduling, so runs can execute in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t n) {
  return splitmix64(splitmix64(splitmix64(master) ^ run) ^ n);
}

/// mt19937_64 stream with a platform-independent uniform double in [0,1):
/// the top 53 bits of each draw scaled by 2^-53.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Labels t_i (ascending) and a symmetric 0-1 adjacency with zero diagonal.
class SampledNetwork {
 public:
  SampledNetwork(std::vector<double> labels, std::vector<std::uint8_t> adjacency, std::uint64_t seed)
      : labels_(std::move(labels)), adjacency_(std::move(adjacency)), seed_(seed) {
    const std::size_t n = labels_.size();
    if (adjacency_.size() != n * n) throw Error(Errc::invalid_graphon, "adjacency must be N x N");
    if (!std::is_sorted(labels_.begin(), labels_.end()))
      throw Error(Errc::invalid_graphon, "labels must be sorted ascending");
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency_[i * n + i] != 0) throw Error(Errc::invalid_graphon, "self-loops are not allowed");
      for (std::size_t j = i + 1; j < n; ++j) {
        if (adjacency_[i * n + j] != adjacency_[j * n + i] || adjacency_[i * n + j] > 1)
          throw Error(Errc::invalid_graphon, "adjacency must be symmetric 0-1");
      }
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<double>& labels() const noexcept { return labels_; }
  const std::vector<std::uint8_t>& adjacency() const noexcept { return adjacency_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool edge(std::size_t i, std::size_t j) const { return adjacency_[i * size() + j] != 0; }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) m += edge(i, j);
    return m;
  }

  std::vector<std::vector<std::size_t>> neighbor_lists() const {
    std::vector<std::vector<std::size_t>> nb(size());
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (edge(i, j)) nb[i].push_back(j);
    return nb;
  }

  bool operator==(const SampledNetwork&) const = default;

 private:
  std::vector<double> labels_;
  std::vector<std::uint8_t> adjacency_;
  std::uint64_t seed_;
};

/// W-random graph: N uniform labels (sorted), then Bernoulli(W(t_i,t_j))
/// edges drawn in lexicographic (i,j), i < j order.
inline SampledNetwork sample_network(const Graphon& g, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::empty_vector, "network needs at least one agent");
  Rng rng(seed);
  std::vector<double> labels(n);
  for (double& t : labels) t = rng.uniform();
  std::sort(labels.begin(), labels.end());
  std::vector<std::uint8_t> adj(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(g.eval(labels[i], labels[j]))) {
        adj[i * n + j] = 1;
        adj[j * n + i] = 1;
      }
    }
  }
  return SampledNetwork(std::move(labels), std::move(adj), seed);
}

struct NetworkEquilibrium {
  Eigen::VectorXd strategies;
  Eigen::VectorXd aggregates;  // (1/N) P s
  bool interior = false;
  std::size_t iterations = 0;
  double residual = 0.0;
};

namespace detail {

struct AgentParameters {
  Eigen::VectorXd standalone;
  Eigen::VectorXd aggregate;
};

inline AgentParameters agent_parameters(const SampledNetwork& net, const GameSpec& spec,
                                        std::span<const double> eta) {
  const Eigen::Index n = static_cast<Eigen::Index>(net.size());
  AgentParameters p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Theta t = theta_of_eta(spec, eta, net.labels()[i]);
    p.standalone[i] = t.standalone;
    p.aggregate[i] = t.aggregate;
  }
  return p;
}

inline Eigen::VectorXd local_aggregate(const std::vector<std::vector<std::size_t>>& nb, const Eigen::VectorXd& s) {
  const double inv_n = 1.0 / static_cast<double>(s.size());
  Eigen::VectorXd z(s.size());
  for (std::size_t i = 0; i < nb.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j : nb[i]) acc += s[static_cast<Eigen::Index>(j)];
    z[static_cast<Eigen::Index>(i)] = acc * inv_n;
  }
  return z;
}

}  // namespace detail

/// Largest eigenvalue of P / N by power iteration.
inline double network_lambda_max(const SampledNetwork& net) {
  const auto nb = net.neighbor_lists();
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { out = detail::local_aggregate(nb, v); };
  return power_iteration(apply, static_cast<Eigen::Index>(net.size()), 0.0).value;
}

/// Projected best-response iteration s <- Pi_S[theta1 + theta2 .* (P/N) s].
inline NetworkEquilibrium solve_network_game(const SampledNetwork& net, const GameSpec& spec,
                                             std::span<const double> eta, const SolverOptions& opts = {}) {
  const detail::AgentParameters theta = detail::agent_parameters(net, spec, eta);
  const double rate = theta.aggregate.cwiseAbs().maxCoeff() * network_lambda_max(net);
  if (!(rate < 1.0)) throw Error(Errc::not_a_contraction, "aggregate coefficient times lambda_max(P/N) >= 1");
  const auto nb = net.neighbor_lists();
  const StrategySet& s = spec.strategy_set();
  const Eigen::Index n = static_cast<Eigen::Index>(net.size());
  auto respond = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = s.project(theta.standalone[i] + theta.aggregate[i] * z[i]);
    return out;
  };
  Eigen::VectorXd strat = Eigen::VectorXd::Zero(n);
  std::size_t it = 0;
  for (;;) {
    if (it >= opts.max_iter) throw Error(Errc::no_convergence, "network best-response iteration hit max_iter");
    Eigen::VectorXd next = respond(detail::local_aggregate(nb, strat));
    const double change = (next - strat).cwiseAbs().maxCoeff();
    strat.swap(next);
    ++it;
    if (change <= opts.tol) break;
  }
  NetworkEquilibrium eq;
  eq.aggregates = detail::local_aggregate(nb, strat);
  eq.residual = (strat - respond(eq.aggregates)).cwiseAbs().maxCoeff();
  eq.strategies = std::move(strat);
  eq.interior = values_interior(eq.strategies, s);
  eq.iterations = it;
  return eq;
}

/// Interior solution by dense solve of (I - Delta_theta2 P/N) s = theta1.
/// Matches solve_network_game whenever no projection binds.
inline NetworkEquilibrium solve_network_linear(const SampledNetwork& net, const GameSpec& spec,
                                               std::span<const double> eta) {
  const detail::AgentParameters theta = detail::agent_parameters(net, spec, eta);
  const Eigen::Index n = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (net.edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) v(i, j) -= theta.aggregate[i] * inv_n;
  NetworkEquilibrium eq;
  eq.strategies = v.partialPivLu().solve(theta.standalone);
  eq.aggregates = detail::local_aggregate(net.neighbor_lists(), eq.strategies);
  eq.residual = (eq.strategies - theta.standalone - theta.aggregate.cwiseProduct(eq.aggregates)).cwiseAbs().maxCoeff();
  eq.interior = values_interior(eq.strategies, spec.strategy_set());
  return eq;
}

/// Observed equilibrium as a step function on the regular grid {i/N}.
inline PiecewiseConstant observe(const SampledNetwork& net, const NetworkEquilibrium& eq) {
  if (static_cast<std::size_t>(eq.strategies.size()) != net.size())
    throw Error(Errc::empty_vector, "equilibrium size does not match the network");
  return interpolate_equilibrium(
      std::span<const double>(eq.strategies.data(), static_cast<std::size_t>(eq.strategies.size())));
}

// Text exchange formats: "i j" per edge (0-indexed, i < j) and one label per line.

inline void write_edge_list(const SampledNetwork& net, std::ostream& out) {
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = i + 1; j < net.size(); ++j)
      if (net.edge(i, j)) out << i << ' ' << j << '\n';
}

inline void write_labels(const SampledNetwork& net, std::ostream& out) {
  for (double t : net.labels()) out << format_double(t) << '\n';
}

inline SampledNetwork read_network(std::istream& labels_in, std::istream& edges_in, std::uint64_t seed = 0) {
  std::vector<double> labels;
  std::string line;
  while (std::getline(labels_in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      labels.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw Error(Errc::io, "bad label line '" + line + "'");
    }
  }
  const std::size_t n = labels.size();
  std::vector<std::uint8_t> adj(n * n, 0);
  while (std::getline(edges_in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::size_t i = 0, j = 0;
    if (!(ss >> i >> j) || i >= j || j >= n) throw Error(Errc::io, "bad edge line '" + line + "'");
    adj[i * n + j] = 1;
    adj[j * n + i] = 1;
  }
  return SampledNetwork(std::move(labels), std::move(adj), seed);
}

}  // namespace gnest
