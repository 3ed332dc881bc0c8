#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gnest/error.hpp"
#include "gnest/graphon.hpp"

namespace gnest {

/// Compact interval of admissible scalar strategies.
struct StrategySet {
  double lower = 0.0;
  double upper = 1.0;

  static StrategySet make(double lower, double upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
      throw Error(Errc::invalid_game, "strategy set must be a finite interval with lower < upper");
    return {lower, upper};
  }

  double s_max() const { return std::max(std::abs(lower), std::abs(upper)); }
  double width() const { return upper - lower; }
  double project(double v) const { return std::clamp(v, lower, upper); }
};

/// Axis-aligned box of admissible parameters.
class ParameterBox {
 public:
  ParameterBox() = default;

  static ParameterBox make(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size()) throw Error(Errc::invalid_game, "box bounds differ in dimension");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i]))
        throw Error(Errc::invalid_game, "box needs finite lo < hi in every coordinate");
      if (lo[i] < 0.0) throw Error(Errc::invalid_game, "parameter box must lie in the nonnegative orthant");
    }
    return ParameterBox(std::move(lo), std::move(hi));
  }

  std::size_t dimension() const noexcept { return lo_.size(); }
  const std::vector<double>& lower() const noexcept { return lo_; }
  const std::vector<double>& upper() const noexcept { return hi_; }

  bool contains(std::span<const double> eta) const {
    if (eta.size() != lo_.size()) return false;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      if (!(eta[i] >= lo_[i] && eta[i] <= hi_[i])) return false;
    }
    return true;
  }

  bool contains_in_interior(std::span<const double> eta) const {
    if (eta.size() != lo_.size()) return false;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      if (!(eta[i] > lo_[i] && eta[i] < hi_[i])) return false;
    }
    return true;
  }

  Eigen::VectorXd center() const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(lo_.size()));
    for (std::size_t i = 0; i < lo_.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
    return c;
  }

 private:
  ParameterBox(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {}

  std::vector<double> lo_;
  std::vector<double> hi_;
};

/// Linear-quadratic payoff parametrizations.
///
/// lq_homogeneous: theta(x) = (eta_1, eta_2) everywhere.
/// lq_sbm: theta(x) = (theta1, eta_k) on community k of the weights pi.
class GameSpec {
 public:
  enum class Kind { lq_homogeneous, lq_sbm };

  static GameSpec lq_homogeneous(StrategySet s, ParameterBox xi) {
    if (xi.dimension() != 2) throw Error(Errc::invalid_game, "homogeneous LQ game has two parameters");
    return GameSpec(Kind::lq_homogeneous, 0.0, {}, s, std::move(xi));
  }

  static GameSpec lq_sbm(double theta1, Eigen::VectorXd pi, StrategySet s, ParameterBox xi) {
    if (!(theta1 > 0.0)) throw Error(Errc::invalid_game, "SBM LQ game needs theta1 > 0");
    if (s.lower < 0.0) throw Error(Errc::invalid_game, "SBM LQ game needs a nonnegative strategy set");
    if (pi.size() == 0 || static_cast<std::size_t>(pi.size()) != xi.dimension())
      throw Error(Errc::invalid_game, "parameter box dimension must equal the number of communities");
    if ((pi.array() <= 0.0).any()) throw Error(Errc::invalid_game, "community weights must be positive");
    return GameSpec(Kind::lq_sbm, theta1, std::move(pi), s, std::move(xi));
  }

  Kind kind() const noexcept { return kind_; }
  double theta1() const noexcept { return theta1_; }
  const Eigen::VectorXd& community_weights() const noexcept { return pi_; }
  const StrategySet& strategy_set() const noexcept { return strategy_set_; }
  const ParameterBox& xi() const noexcept { return xi_; }
  std::size_t dimension() const noexcept { return xi_.dimension(); }

  /// Partition on which theta_eta is constant.
  std::vector<double> heterogeneity_breakpoints() const {
    if (kind_ == Kind::lq_sbm) return community_breakpoints(pi_);
    return {0.0, 1.0};
  }

  /// Indices of parameters that scale the aggregate term.
  std::vector<std::size_t> aggregate_coordinates() const {
    if (kind_ == Kind::lq_homogeneous) return {1};
    std::vector<std::size_t> all(dimension());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

 private:
  GameSpec(Kind k, double theta1, Eigen::VectorXd pi, StrategySet s, ParameterBox xi)
      : kind_(k), theta1_(theta1), pi_(std::move(pi)), strategy_set_(s), xi_(std::move(xi)) {}

  Kind kind_;
  double theta1_;
  Eigen::VectorXd pi_;
  StrategySet strategy_set_;
  ParameterBox xi_;
};

struct Theta {
  double standalone = 0.0;  // [theta]_1
  double aggregate = 0.0;   // [theta]_2
};

/// -s^2/2 + (theta_1 + theta_2 z) s.
inline double lq_payoff(double s, double z, Theta theta) {
  return -0.5 * s * s + (theta.standalone + theta.aggregate * z) * s;
}

/// Projection of the unconstrained maximizer theta_1 + theta_2 z onto S.
inline double best_response(double z, Theta theta, const StrategySet& s) {
  return s.project(theta.standalone + theta.aggregate * z);
}

namespace detail {

inline Theta theta_unchecked(const GameSpec& spec, std::span<const double> eta, double x) {
  if (spec.kind() == GameSpec::Kind::lq_homogeneous) return {eta[0], eta[1]};
  const std::size_t k = cell_index(spec.heterogeneity_breakpoints(), x);
  return {spec.theta1(), eta[k]};
}

}  // namespace detail

inline Theta theta_of_eta(const GameSpec& spec, std::span<const double> eta, double x) {
  if (!spec.xi().contains(eta)) throw Error(Errc::parameter_out_of_box, "eta is outside the parameter box");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "x must lie in [0,1]");
  return detail::theta_unchecked(spec, eta, x);
}

/// theta_eta evaluated on each cell of a partition refining the heterogeneity
/// partition. No box check; callers that differentiate numerically step outside.
struct CellParameters {
  Eigen::VectorXd standalone;
  Eigen::VectorXd aggregate;
};

inline CellParameters cell_parameters(const GameSpec& spec, std::span<const double> eta,
                                      const std::vector<double>& cells) {
  const Eigen::Index n = static_cast<Eigen::Index>(cells.size()) - 1;
  CellParameters p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Theta t = detail::theta_unchecked(spec, eta, 0.5 * (cells[i] + cells[i + 1]));
    p.standalone[i] = t.standalone;
    p.aggregate[i] = t.aggregate;
  }
  return p;
}

/// d theta / d eta_i on each cell. theta is affine in eta for both LQ variants,
/// so these do not depend on eta.
inline std::vector<CellParameters> cell_parameter_jacobian(const GameSpec& spec, const std::vector<double>& cells) {
  const Eigen::Index n = static_cast<Eigen::Index>(cells.size()) - 1;
  std::vector<CellParameters> jac(spec.dimension(),
                                  CellParameters{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)});
  if (spec.kind() == GameSpec::Kind::lq_homogeneous) {
    jac[0].standalone.setOnes();
    jac[1].aggregate.setOnes();
    return jac;
  }
  const std::vector<double> communities = spec.heterogeneity_breakpoints();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t k = cell_index(communities, 0.5 * (cells[i] + cells[i + 1]));
    jac[k].aggregate[i] = 1.0;
  }
  return jac;
}

/// Largest aggregate coefficient over the corners of the parameter box.
inline double max_aggregate_coefficient(const GameSpec& spec) {
  double m = 0.0;
  for (std::size_t i : spec.aggregate_coordinates()) m = std::max(m, spec.xi().upper()[i]);
  return m;
}

/// 1 - lambda_max(W) * max aggregate coefficient over the box. Positive
/// certifies a unique equilibrium for every eta in the box.
inline double contraction_margin(const GameSpec& spec, const Graphon& g) {
  return 1.0 - lambda_max(g) * max_aggregate_coefficient(spec);
}

}  // namespace gnest
