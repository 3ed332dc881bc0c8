#pragma once

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>

#include <Eigen/Dense>

#include "gnest/error.hpp"

namespace gnest {

struct PowerIterationOptions {
  double rel_tol = 1e-10;
  std::size_t max_iter = 100000;
  /// Iterations without convergence before switching to the shifted operator.
  std::size_t stall_after = 2000;
};

struct PowerIterationResult {
  double value = 0.0;
  std::size_t iterations = 0;
  bool shifted = false;
};

/// Largest eigenvalue of a symmetric operator given as a mat-vec callable.
///
/// Starts from the constant vector and stops once the eigen-residual
/// ||Av - rho v|| falls below rel_tol * |rho|. If that has not happened after
/// stall_after iterations (e.g. a -lambda_max eigenvalue of equal magnitude),
/// restarts on A + sigma I with sigma = max(trace / n, |rho|).
inline PowerIterationResult power_iteration(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
    Eigen::Index n, double trace, const PowerIterationOptions& opts = {}) {
  PowerIterationResult out;
  if (n == 0) return out;

  double shift = 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd w(n);
  std::size_t since_restart = 0;
  double rho = 0.0;
  for (std::size_t it = 1; it <= opts.max_iter; ++it, ++since_restart) {
    apply(v, w);
    if (shift != 0.0) w += shift * v;
    rho = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) {
      out.value = 0.0;
      out.iterations = it;
      return out;
    }
    const double residual = (w - rho * v).norm();
    if (residual <= opts.rel_tol * std::abs(rho)) {
      out.value = rho - shift;
      out.iterations = it;
      out.shifted = shift != 0.0;
      return out;
    }
    v = w / wn;
    if (shift == 0.0 && since_restart >= opts.stall_after) {
      shift = std::max(trace / static_cast<double>(n), std::abs(rho));
      if (shift == 0.0) shift = 1.0;
      v.setConstant(1.0 / std::sqrt(static_cast<double>(n)));
      since_restart = 0;
    }
  }
  throw Error(Errc::no_convergence, "power iteration exceeded its iteration cap");
}

/// Largest eigenvalue of K * diag(w) for symmetric K and positive weights w.
/// Equivalent to the symmetric matrix diag(sqrt w) K diag(sqrt w).
inline double weighted_kernel_lambda_max(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& weights) {
  const Eigen::VectorXd root = weights.cwiseSqrt();
  const Eigen::MatrixXd sym = root.asDiagonal() * kernel * root.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(Errc::no_convergence, "symmetric eigensolve failed");
  return es.eigenvalues().maxCoeff();
}

}  // namespace gnest
