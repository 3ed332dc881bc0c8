#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gnest/equilibrium.hpp"
#include "gnest/error.hpp"
#include "gnest/game.hpp"
#include "gnest/graphon.hpp"
#include "gnest/piecewise.hpp"
#include "gnest/sampling.hpp"

namespace gnest {

/// Aggregates whose L2 distance to their mean is at most this count as constant.
inline constexpr double constant_aggregate_tol = 1e-10;

struct HomogeneousDetail {
  double lambda_m = 0.0;
  double nu_bar = 0.0;
  double aggregate_spread = 0.0;  // ||z - gamma 1||_{L2}
};

struct SbmDetail {
  double min_aggregate = 0.0;
  double min_weight = 0.0;
};

struct IdentifiabilityReport {
  bool identifiable = false;
  std::optional<double> constant;  // L in ||eta - eta_bar|| <= L ||s_eta - s_eta_bar||
  std::optional<double> gamma;     // mean aggregate; only eta_1 + gamma eta_2 is identified when constant
  std::variant<HomogeneousDetail, SbmDetail> detail;
};

inline bool check_interior(const GraphonEquilibrium& eq, const StrategySet& s) {
  return values_interior(eq.strategy.values(), s);
}

inline bool check_interior(const NetworkEquilibrium& eq, const StrategySet& s) {
  return values_interior(eq.strategies, s);
}

/// Smallest eigenvalue of [[1, g], [g, g^2 + 1]].
inline double homogeneous_lambda_m(double gamma) {
  const double a = gamma * gamma + 2.0;
  return (a - std::sqrt(a * a - 4.0)) / 2.0;
}

/// Identifiability of (eta_1, eta_2) in the homogeneous LQ game: identifiable
/// iff the equilibrium aggregate z = W s is not constant.
///
/// With z = gamma 1 + z_perp, ||a 1 + b z||^2 = (a + gamma b)^2 + b^2 ||z_perp||^2,
/// so the lower bound needs nu_bar = min(1, ||z_perp||^2) and
/// L = 2 / sqrt(lambda_m nu_bar).
inline IdentifiabilityReport homogeneous_identifiability(const Graphon& g, std::span<const double> eta_bar) {
  const GraphonEquilibrium eq = solve_lq_homogeneous(g, eta_bar);
  const PiecewiseConstant z = apply_operator(g, eq.strategy);
  const double gamma = z.integral();
  const double spread = l2_distance(z, PiecewiseConstant::constant(gamma));

  IdentifiabilityReport rep;
  rep.gamma = gamma;
  HomogeneousDetail d;
  d.aggregate_spread = spread;
  d.lambda_m = homogeneous_lambda_m(gamma);
  d.nu_bar = std::min(1.0, spread * spread);
  if (spread > constant_aggregate_tol) {
    rep.identifiable = true;
    rep.constant = 2.0 / std::sqrt(d.lambda_m * d.nu_bar);
  }
  rep.detail = d;
  return rep;
}

/// L = 2 / (min_i zz_i sqrt(min_k pi_k)) for the SBM LQ game.
inline IdentifiabilityReport sbm_identifiability_constant(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi,
                                                          double theta1, const Eigen::VectorXd& eta_bar) {
  const BlockEquilibrium eq = solve_lq_sbm(q, pi, theta1, eta_bar);
  SbmDetail d;
  d.min_aggregate = eq.aggregates.minCoeff();
  d.min_weight = pi.minCoeff();
  if (!(d.min_aggregate > 0.0))
    throw Error(Errc::degenerate_aggregate, "some community has a non-positive equilibrium aggregate");
  IdentifiabilityReport rep;
  rep.identifiable = true;
  rep.constant = 2.0 / (d.min_aggregate * std::sqrt(d.min_weight));
  rep.detail = d;
  return rep;
}

/// True when ||eta - eta_bar|| > L ||s_eta - s_eta_bar||; the 0 <= 0 case holds.
inline bool identifiability_violated(double param_distance, double equilibrium_distance, double l) {
  if (param_distance == 0.0) return false;
  return param_distance > l * equilibrium_distance;
}

/// Counts parameters drawn uniformly from the box that violate the
/// identifiability inequality with constant L.
inline std::size_t empirical_identifiability_test(const Graphon& g, const GameSpec& spec,
                                                  std::span<const double> eta_bar, double l, std::size_t samples,
                                                  std::uint64_t seed) {
  const LqModel model(g, spec);
  const Eigen::VectorXd& w = model.op().weights;
  const Eigen::VectorXd ref = model.solve(eta_bar).strategy;
  const Eigen::Map<const Eigen::VectorXd> bar(eta_bar.data(), static_cast<Eigen::Index>(eta_bar.size()));
  Rng rng(seed);
  std::size_t violations = 0;
  Eigen::VectorXd eta(static_cast<Eigen::Index>(spec.dimension()));
  for (std::size_t k = 0; k < samples; ++k) {
    for (std::size_t i = 0; i < spec.dimension(); ++i)
      eta[static_cast<Eigen::Index>(i)] = rng.uniform(spec.xi().lower()[i], spec.xi().upper()[i]);
    const Eigen::VectorXd s = model.solve({eta.data(), static_cast<std::size_t>(eta.size())}).strategy;
    const double eq_dist = std::sqrt(w.dot((s - ref).cwiseAbs2()));
    if (identifiability_violated((eta - bar).norm(), eq_dist, l)) ++violations;
  }
  return violations;
}

inline constexpr double fd_step_first = 1e-5;
inline constexpr double fd_step_second = 1e-4;

/// Worst error of central finite differences of s_eta against the analytic
/// derivatives, over coordinates and cells. Each error is scaled by
/// max(1, |analytic|).
inline double fd_check(const Graphon& g, const GameSpec& spec, std::span<const double> eta, int order) {
  if (order != 1 && order != 2) throw Error(Errc::invalid_game, "fd_check order must be 1 or 2");
  const LqModel model(g, spec);
  const LqModel::Solution sol = model.solve(eta);
  if (!model.interior(sol)) throw Error(Errc::not_interior, "equilibrium touches the strategy bounds");
  const auto grad = model.gradient(sol);
  const std::size_t n = spec.dimension();
  std::vector<double> base(eta.begin(), eta.end());

  auto at = [&](std::vector<std::pair<std::size_t, double>> shifts) {
    std::vector<double> e = base;
    for (auto [i, d] : shifts) e[i] += d;
    return model.solve(e).strategy;
  };
  auto worst = [](const Eigen::VectorXd& fd, const Eigen::VectorXd& an) {
    double m = 0.0;
    for (Eigen::Index c = 0; c < fd.size(); ++c)
      m = std::max(m, std::abs(fd[c] - an[c]) / std::max(1.0, std::abs(an[c])));
    return m;
  };

  double err = 0.0;
  if (order == 1) {
    const double h = fd_step_first;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::VectorXd fd = (at({{i, h}}) - at({{i, -h}})) / (2.0 * h);
      err = std::max(err, worst(fd, grad[i]));
    }
    return err;
  }
  const double h = fd_step_second;
  const auto hess = model.second_derivatives(sol, grad);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      Eigen::VectorXd fd;
      if (i == j)
        fd = (at({{i, h}}) - 2.0 * sol.strategy + at({{i, -h}})) / (h * h);
      else
        fd = (at({{i, h}, {j, h}}) - at({{i, h}, {j, -h}}) - at({{i, -h}, {j, h}}) + at({{i, -h}, {j, -h}})) /
             (4.0 * h * h);
      err = std::max(err, worst(fd, hess[i][j]));
    }
  }
  return err;
}

}  // namespace gnest
