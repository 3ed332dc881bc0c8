#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gnest/equilibrium.hpp"
#include "gnest/error.hpp"
#include "gnest/game.hpp"
#include "gnest/graphon.hpp"
#include "gnest/piecewise.hpp"

namespace gnest {

struct OptimizerOptions {
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  double gtol = 1e-9;
  std::size_t max_iter = 5000;
  std::size_t starts = 8;
  /// Aggregate coordinates are capped so that the contraction margin stays >= this.
  double spectral_buffer = 1e-6;
  /// Use the Barzilai-Borwein step as the first Armijo trial after iteration 0.
  bool spectral_step = true;
  std::size_t max_backtracks = 80;
};

struct EstimationResult {
  Eigen::VectorXd eta_hat;
  double objective = 0.0;
  double gradient_norm = 0.0;  // projected-gradient norm at eta_hat
  double hessian_min_eig = std::numeric_limits<double>::quiet_NaN();
  std::size_t starts = 0;
  std::size_t iterations_total = 0;
  bool converged = false;
};

struct HessianResult {
  Eigen::MatrixXd matrix;  // 2 T1 - 2 T2
  Eigen::MatrixXd t1;      // int grad s grad s^T
  Eigen::MatrixXd t2;      // int (observed - s) hess s
  double min_eigenvalue = 0.0;
};

/// J(eta) = || observed - s_eta ||^2_{L2} for a fixed observation.
///
/// The model equilibrium is constant on the model cells, so the observation
/// only enters through its cell means m_c and its within-cell spread:
///   J = sum_c int_c (obs - m_c)^2 + sum_c w_c (s_c - m_c)^2,
/// which is exact and free of cancellation.
class Objective {
 public:
  Objective(const PiecewiseConstant& observed, const Graphon& g, const GameSpec& spec) : model_(g, spec) {
    const std::vector<double>& cells = model_.cells();
    const std::vector<double> mass = cell_integrals(observed, cells);
    const Eigen::Index n = model_.op().size();
    weights_ = model_.op().weights;
    mean_.resize(n);
    for (Eigen::Index c = 0; c < n; ++c) mean_[c] = mass[c] / weights_[c];
    const std::vector<double> breaks = merge_breakpoints(observed.breakpoints(), cells);
    within_ = 0.0;
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
      const double mid = 0.5 * (breaks[j] + breaks[j + 1]);
      const double d = observed(mid) - mean_[static_cast<Eigen::Index>(cell_index(cells, mid))];
      within_ += (breaks[j + 1] - breaks[j]) * d * d;
    }
  }

  const LqModel& model() const noexcept { return model_; }
  double within_cell_spread() const noexcept { return within_; }

  /// Equilibrium on the model cells; falls back to projected iteration when
  /// the closed form leaves the strategy set.
  Eigen::VectorXd equilibrium(std::span<const double> eta) const {
    const LqModel::Solution sol = model_.solve(eta);
    if (model_.interior(sol)) return sol.strategy;
    const CellParameters theta = cell_parameters(model_.spec(), eta, model_.cells());
    const StrategySet& s = model_.spec().strategy_set();
    auto br = [&](std::size_t i, double z) {
      const auto k = static_cast<Eigen::Index>(i);
      return best_response(z, Theta{theta.standalone[k], theta.aggregate[k]}, s);
    };
    const GraphonEquilibrium eq = iterate_best_response(model_.op(), br, s, SolverOptions{1e-13, 100000});
    const std::vector<double>& v = eq.strategy.values();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  double value(std::span<const double> eta) const { return value_of(equilibrium(eta)); }

  Eigen::VectorXd gradient(std::span<const double> eta) const {
    const LqModel::Solution sol = interior_solution(eta);
    const auto grad = model_.gradient(sol);
    const Eigen::VectorXd wres = weights_.cwiseProduct(mean_ - sol.strategy);
    Eigen::VectorXd out(static_cast<Eigen::Index>(grad.size()));
    for (std::size_t i = 0; i < grad.size(); ++i) out[static_cast<Eigen::Index>(i)] = -2.0 * wres.dot(grad[i]);
    return out;
  }

  HessianResult hessian(std::span<const double> eta) const {
    const LqModel::Solution sol = interior_solution(eta);
    const auto grad = model_.gradient(sol);
    const auto second = model_.second_derivatives(sol, grad);
    const Eigen::VectorXd wres = weights_.cwiseProduct(mean_ - sol.strategy);
    const Eigen::Index n = static_cast<Eigen::Index>(grad.size());
    HessianResult h;
    h.t1.resize(n, n);
    h.t2.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        h.t1(i, j) = h.t1(j, i) = grad[i].dot(weights_.cwiseProduct(grad[j]));
        h.t2(i, j) = h.t2(j, i) = wres.dot(second[i][j]);
      }
    }
    h.matrix = 2.0 * h.t1 - 2.0 * h.t2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix, Eigen::EigenvaluesOnly);
    h.min_eigenvalue = es.eigenvalues().minCoeff();
    return h;
  }

 private:
  double value_of(const Eigen::VectorXd& s) const {
    return within_ + weights_.dot((s - mean_).cwiseAbs2());
  }

  LqModel::Solution interior_solution(std::span<const double> eta) const {
    LqModel::Solution sol = model_.solve(eta);
    if (!model_.interior(sol)) throw Error(Errc::not_interior, "equilibrium touches the strategy bounds");
    return sol;
  }

  LqModel model_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd mean_;
  double within_ = 0.0;
};

namespace detail {

inline void require_in_box(const GameSpec& spec, std::span<const double> eta) {
  if (!spec.xi().contains(eta)) throw Error(Errc::parameter_out_of_box, "eta is outside the parameter box");
}

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// k-th element of the van der Corput sequence in the given base.
inline double radical_inverse(std::size_t k, std::size_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

inline std::size_t nth_prime(std::size_t n) {
  std::size_t count = 0;
  for (std::size_t p = 2;; ++p) {
    bool prime = true;
    for (std::size_t d = 2; d * d <= p; ++d)
      if (p % d == 0) {
        prime = false;
        break;
      }
    if (prime && count++ == n) return p;
  }
}

}  // namespace detail

inline double objective(const PiecewiseConstant& observed, const Graphon& g, const GameSpec& spec,
                        std::span<const double> eta) {
  detail::require_in_box(spec, eta);
  return Objective(observed, g, spec).value(eta);
}

inline Eigen::VectorXd objective_gradient(const PiecewiseConstant& observed, const Graphon& g, const GameSpec& spec,
                                          std::span<const double> eta) {
  detail::require_in_box(spec, eta);
  return Objective(observed, g, spec).gradient(eta);
}

inline HessianResult hessian(const PiecewiseConstant& observed, const Graphon& g, const GameSpec& spec,
                             std::span<const double> eta) {
  detail::require_in_box(spec, eta);
  return Objective(observed, g, spec).hessian(eta);
}

/// Deterministic start points: the box center, then `count` Halton points.
inline std::vector<Eigen::VectorXd> multistart_points(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                                      std::size_t count) {
  std::vector<Eigen::VectorXd> pts;
  pts.push_back(0.5 * (lo + hi));
  for (std::size_t k = 1; k <= count; ++k) {
    Eigen::VectorXd p(lo.size());
    for (Eigen::Index d = 0; d < lo.size(); ++d)
      p[d] = lo[d] + (hi[d] - lo[d]) * detail::radical_inverse(k, detail::nth_prime(static_cast<std::size_t>(d)));
    pts.push_back(std::move(p));
  }
  return pts;
}

struct DescentRun {
  Eigen::VectorXd eta;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Projected gradient descent with Armijo backtracking on a box [lo, hi].
inline DescentRun projected_descent(const Objective& obj, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                    Eigen::VectorXd start, const OptimizerOptions& opts) {
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.cwiseMax(lo).cwiseMin(hi); };
  DescentRun run;
  run.eta = project(start);
  run.value = obj.value(detail::as_span(run.eta));
  Eigen::VectorXd grad = obj.gradient(detail::as_span(run.eta));
  double trial = opts.initial_step;
  for (;;) {
    run.projected_gradient_norm = (run.eta - project(run.eta - grad)).norm();
    if (run.projected_gradient_norm <= opts.gtol) {
      run.converged = true;
      return run;
    }
    if (run.iterations >= opts.max_iter) return run;

    double t = trial;
    Eigen::VectorXd cand;
    double cand_value = 0.0;
    bool accepted = false;
    for (std::size_t b = 0; b < opts.max_backtracks; ++b, t *= opts.shrink) {
      cand = project(run.eta - t * grad);
      cand_value = obj.value(detail::as_span(cand));
      if (cand_value <= run.value + opts.armijo_c * grad.dot(cand - run.eta)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return run;

    const Eigen::VectorXd cand_grad = obj.gradient(detail::as_span(cand));
    const Eigen::VectorXd step = cand - run.eta;
    const double sy = step.dot(cand_grad - grad);
    trial = opts.spectral_step && sy > 0.0 ? std::clamp(step.squaredNorm() / sy, 1e-10, 1e10) : opts.initial_step;
    run.eta = cand;
    run.value = cand_value;
    grad = cand_grad;
    ++run.iterations;
  }
}

/// Minimizes J over the parameter box from the deterministic multistart set and
/// keeps the run with the smallest J (ties within 1e-12 go to the
/// lexicographically smallest eta).
inline EstimationResult estimate(const PiecewiseConstant& observed, const Graphon& g, const GameSpec& spec,
                                 const OptimizerOptions& opts = {}) {
  const std::size_t dim = spec.dimension();
  if (dim == 0) throw Error(Errc::no_start, "parameter box is empty");
  if (!(contraction_margin(spec, g) > 0.0))
    throw Error(Errc::infeasible_parameter_set, "a corner of the parameter box violates the spectral condition");

  const Objective obj(observed, g, spec);
  Eigen::VectorXd lo(static_cast<Eigen::Index>(dim)), hi(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    lo[static_cast<Eigen::Index>(i)] = spec.xi().lower()[i];
    hi[static_cast<Eigen::Index>(i)] = spec.xi().upper()[i];
  }
  const double lam = obj.model().graphon_lambda_max();
  if (lam > 0.0) {
    const double cap = (1.0 - opts.spectral_buffer) / lam;
    for (std::size_t i : spec.aggregate_coordinates()) {
      auto k = static_cast<Eigen::Index>(i);
      hi[k] = std::max(lo[k], std::min(hi[k], cap));
    }
  }

  std::vector<DescentRun> runs;
  for (const Eigen::VectorXd& start : multistart_points(lo, hi, opts.starts))
    runs.push_back(projected_descent(obj, lo, hi, start, opts));

  double best_value = runs.front().value;
  for (const DescentRun& r : runs) best_value = std::min(best_value, r.value);
  const DescentRun* best = nullptr;
  for (const DescentRun& r : runs) {
    if (r.value - best_value > 1e-12) continue;
    if (best == nullptr ||
        std::lexicographical_compare(r.eta.begin(), r.eta.end(), best->eta.begin(), best->eta.end()))
      best = &r;
  }

  EstimationResult out;
  out.eta_hat = best->eta;
  out.objective = best->value;
  out.gradient_norm = best->projected_gradient_norm;
  out.converged = best->converged;
  out.starts = runs.size();
  for (const DescentRun& r : runs) out.iterations_total += r.iterations;
  try {
    out.hessian_min_eig = obj.hessian(detail::as_span(out.eta_hat)).min_eigenvalue;
  } catch (const Error&) {
    // left as NaN when eta_hat has a non-interior equilibrium
  }
  return out;
}

}  // namespace gnest
