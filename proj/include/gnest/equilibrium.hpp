#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gnest/error.hpp"
#include "gnest/game.hpp"
#include "gnest/graphon.hpp"
#include "gnest/piecewise.hpp"

namespace gnest {

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
};

/// Relative band around the strategy bounds treated as "on the boundary".
inline constexpr double interiority_fraction = 1e-9;

inline bool values_interior(std::span<const double> values, const StrategySet& s) {
  const double band = interiority_fraction * s.width();
  for (double v : values) {
    if (!(v - s.lower > band && s.upper - v > band)) return false;
  }
  return true;
}

inline bool values_interior(const Eigen::VectorXd& values, const StrategySet& s) {
  return values_interior(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), s);
}

struct GraphonEquilibrium {
  PiecewiseConstant strategy;
  PiecewiseConstant aggregate;
  bool interior = false;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Equilibrium of the SBM LQ game as one value per community.
struct BlockEquilibrium {
  Eigen::VectorXd values;
  Eigen::VectorXd aggregates;
};

namespace detail {

inline PiecewiseConstant to_function(const std::vector<double>& cells, const Eigen::VectorXd& v) {
  return on_cells(cells, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace detail

/// Best-response iteration s <- BR(W s) from s = 0 on a block discretization.
///
/// br(i, z) must return cell i's best response to aggregate z. Stops once the
/// sup-norm change between iterates is at most opts.tol.
template <class BestResponseFn>
GraphonEquilibrium iterate_best_response(const BlockOperator& op, BestResponseFn&& br, const StrategySet& s,
                                         const SolverOptions& opts = {}) {
  const Eigen::Index n = op.size();
  Eigen::VectorXd strat = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd next(n);
  std::size_t it = 0;
  for (;;) {
    if (it >= opts.max_iter) throw Error(Errc::no_convergence, "best-response iteration hit max_iter");
    const Eigen::VectorXd z = op.apply(strat);
    for (Eigen::Index i = 0; i < n; ++i) next[i] = br(static_cast<std::size_t>(i), z[i]);
    const double change = (next - strat).cwiseAbs().maxCoeff();
    strat.swap(next);
    ++it;
    if (change <= opts.tol) break;
  }
  const Eigen::VectorXd z = op.apply(strat);
  double residual = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    residual = std::max(residual, std::abs(strat[i] - br(static_cast<std::size_t>(i), z[i])));
  return GraphonEquilibrium{detail::to_function(op.breaks, strat), detail::to_function(op.breaks, z),
                            values_interior(strat, s), it, residual};
}

/// Projected best-response fixed point of an LQ graphon game.
inline GraphonEquilibrium solve_fixed_point(const Graphon& g, const GameSpec& spec, std::span<const double> eta,
                                            const SolverOptions& opts = {}) {
  if (eta.size() != spec.dimension()) throw Error(Errc::parameter_out_of_box, "eta has the wrong dimension");
  const BlockOperator op = g.discretize(spec.heterogeneity_breakpoints());
  const CellParameters theta = cell_parameters(spec, eta, op.breaks);
  const double rate = lambda_max(g) * theta.aggregate.cwiseAbs().maxCoeff();
  if (!(rate < 1.0)) throw Error(Errc::not_a_contraction, "best-response map is not a contraction at eta");
  const StrategySet& s = spec.strategy_set();
  auto br = [&](std::size_t i, double z) {
    return best_response(z, Theta{theta.standalone[static_cast<Eigen::Index>(i)],
                                  theta.aggregate[static_cast<Eigen::Index>(i)]},
                         s);
  };
  return iterate_best_response(op, br, s, opts);
}

/// Interior LQ equilibrium s = (I - Delta_theta2 W)^{-1} theta1 and its
/// derivatives in eta, on a fixed block discretization of the graphon.
///
/// Derivatives come from differentiating V s = theta1 with V = I - Delta_theta2 W:
///   V ds_i = dtheta1_i + dDelta_i W s
///   V d2s_ij = dDelta_i W ds_j + dDelta_j W ds_i
class LqModel {
 public:
  struct Solution {
    Eigen::VectorXd strategy;
    Eigen::VectorXd aggregate;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  };

  LqModel(const Graphon& g, const GameSpec& spec)
      : spec_(spec),
        op_(g.discretize(spec.heterogeneity_breakpoints())),
        wmat_(op_.matrix()),
        jacobian_(cell_parameter_jacobian(spec, op_.breaks)),
        lambda_max_(lambda_max(g)) {}

  const GameSpec& spec() const noexcept { return spec_; }
  const BlockOperator& op() const noexcept { return op_; }
  const std::vector<double>& cells() const noexcept { return op_.breaks; }
  double graphon_lambda_max() const noexcept { return lambda_max_; }

  /// Throws SpectralConditionViolated unless max|theta2| lambda_max < 1.
  Solution solve(std::span<const double> eta) const {
    if (eta.size() != spec_.dimension()) throw Error(Errc::parameter_out_of_box, "eta has the wrong dimension");
    const CellParameters theta = cell_parameters(spec_, eta, op_.breaks);
    if (!(theta.aggregate.cwiseAbs().maxCoeff() * lambda_max_ < 1.0))
      throw Error(Errc::spectral_condition_violated, "aggregate coefficient times lambda_max must be < 1");
    const Eigen::Index n = op_.size();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - theta.aggregate.asDiagonal() * wmat_;
    Solution sol{Eigen::VectorXd(), Eigen::VectorXd(), Eigen::PartialPivLU<Eigen::MatrixXd>(v)};
    sol.strategy = sol.lu.solve(theta.standalone);
    sol.aggregate = wmat_ * sol.strategy;
    return sol;
  }

  bool interior(const Solution& sol) const { return values_interior(sol.strategy, spec_.strategy_set()); }

  std::vector<Eigen::VectorXd> gradient(const Solution& sol) const {
    std::vector<Eigen::VectorXd> grad;
    grad.reserve(jacobian_.size());
    for (const CellParameters& d : jacobian_)
      grad.push_back(sol.lu.solve(d.standalone + d.aggregate.cwiseProduct(sol.aggregate)));
    return grad;
  }

  /// Symmetric n x n table of second derivatives; entry (j,i) copies (i,j).
  std::vector<std::vector<Eigen::VectorXd>> second_derivatives(const Solution& sol,
                                                               const std::vector<Eigen::VectorXd>& grad) const {
    const std::size_t n = jacobian_.size();
    std::vector<Eigen::VectorXd> w_grad(n);
    for (std::size_t i = 0; i < n; ++i) w_grad[i] = wmat_ * grad[i];
    std::vector<std::vector<Eigen::VectorXd>> hess(n, std::vector<Eigen::VectorXd>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const Eigen::VectorXd rhs =
            jacobian_[i].aggregate.cwiseProduct(w_grad[j]) + jacobian_[j].aggregate.cwiseProduct(w_grad[i]);
        hess[i][j] = sol.lu.solve(rhs);
        if (j != i) hess[j][i] = hess[i][j];
      }
    }
    return hess;
  }

  PiecewiseConstant as_function(const Eigen::VectorXd& v) const { return detail::to_function(op_.breaks, v); }

 private:
  GameSpec spec_;
  BlockOperator op_;
  Eigen::MatrixXd wmat_;
  std::vector<CellParameters> jacobian_;
  double lambda_max_;
};

/// Bonacich-type closed form (I - eta_2 W)^{-1} eta_1 1 on the graphon's
/// natural partition. Without a strategy set the result is flagged interior.
inline GraphonEquilibrium solve_lq_homogeneous(const Graphon& g, std::span<const double> eta,
                                               const std::optional<StrategySet>& s = std::nullopt) {
  if (eta.size() != 2) throw Error(Errc::parameter_out_of_box, "homogeneous LQ game has two parameters");
  const double lam = lambda_max(g);
  if (!(std::abs(eta[1]) * lam < 1.0))
    throw Error(Errc::spectral_condition_violated, "eta_2 * lambda_max(W) must be < 1");
  const BlockOperator op = g.discretize();
  const Eigen::Index n = op.size();
  const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - eta[1] * op.matrix();
  const Eigen::VectorXd strat = v.partialPivLu().solve(Eigen::VectorXd::Constant(n, eta[0]));
  const Eigen::VectorXd z = op.apply(strat);
  const double residual = (strat - (Eigen::VectorXd::Constant(n, eta[0]) + eta[1] * z)).cwiseAbs().maxCoeff();
  return GraphonEquilibrium{detail::to_function(op.breaks, strat), detail::to_function(op.breaks, z),
                            s ? values_interior(strat, *s) : true, 0, residual};
}

/// Community-level equilibrium theta1 (I - Delta_eta Q Delta_pi)^{-1} 1.
inline BlockEquilibrium solve_lq_sbm(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi, double theta1,
                                     const Eigen::VectorXd& eta) {
  const Eigen::Index k = q.rows();
  if (q.cols() != k || pi.size() != k || eta.size() != k)
    throw Error(Errc::invalid_game, "Q, pi and eta must agree in dimension");
  if (!(theta1 > 0.0)) throw Error(Errc::invalid_game, "theta1 must be positive");
  const double lam = weighted_kernel_lambda_max(q, pi);
  if (!(eta.cwiseAbs().maxCoeff() * lam < 1.0))
    throw Error(Errc::spectral_condition_violated, "max eta_k * lambda_max(Q Delta_pi) must be < 1");
  const Eigen::MatrixXd m = q * pi.asDiagonal();
  const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(k, k) - eta.asDiagonal() * m;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(v);
  if (!lu.isInvertible()) throw Error(Errc::singular_system, "I - Delta_eta Q Delta_pi is singular");
  BlockEquilibrium out;
  out.values = lu.solve(Eigen::VectorXd::Constant(k, theta1));
  out.aggregates = m * out.values;
  return out;
}

/// d s_eta / d eta_i for each coordinate i, as step functions.
inline std::vector<PiecewiseConstant> equilibrium_gradient(const Graphon& g, const GameSpec& spec,
                                                           std::span<const double> eta) {
  const LqModel model(g, spec);
  const LqModel::Solution sol = model.solve(eta);
  if (!model.interior(sol)) throw Error(Errc::not_interior, "equilibrium touches the strategy bounds");
  std::vector<PiecewiseConstant> out;
  for (const Eigen::VectorXd& d : model.gradient(sol)) out.push_back(model.as_function(d));
  return out;
}

/// d^2 s_eta / d eta_i d eta_j as a symmetric table of step functions.
inline std::vector<std::vector<PiecewiseConstant>> equilibrium_second_derivatives(const Graphon& g,
                                                                                  const GameSpec& spec,
                                                                                  std::span<const double> eta) {
  const LqModel model(g, spec);
  const LqModel::Solution sol = model.solve(eta);
  if (!model.interior(sol)) throw Error(Errc::not_interior, "equilibrium touches the strategy bounds");
  const auto hess = model.second_derivatives(sol, model.gradient(sol));
  std::vector<std::vector<PiecewiseConstant>> out(hess.size());
  for (std::size_t i = 0; i < hess.size(); ++i) {
    for (const Eigen::VectorXd& h : hess[i]) out[i].push_back(model.as_function(h));
  }
  return out;
}

}  // namespace gnest
