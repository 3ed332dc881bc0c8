#pragma once

// Shared fixtures and independent numerical oracles for the test suite.
// Nothing here calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gnest/gnest.hpp"

namespace testing_support {

inline Eigen::MatrixXd four_community_q() {
  Eigen::MatrixXd q(4, 4);
  q << 0.9, 0.05, 0.0, 0.0,  //
      0.05, 0.2, 0.05, 0.0,  //
      0.0, 0.05, 0.2, 0.05,  //
      0.0, 0.0, 0.05, 0.8;
  return q;
}

inline Eigen::VectorXd four_community_pi() { return Eigen::VectorXd::Constant(4, 0.25); }

inline std::vector<double> four_community_eta() { return {0.8, 0.6, 1.0, 0.8}; }

inline gnest::Graphon four_community_graphon() {
  return gnest::Graphon::sbm(four_community_q(), four_community_pi());
}

inline gnest::GameSpec four_community_game() {
  return gnest::GameSpec::lq_sbm(1.0, four_community_pi(), gnest::StrategySet::make(0.0, 10.0),
                                 gnest::ParameterBox::make(std::vector<double>(4, 0.01), std::vector<double>(4, 1.2)));
}

inline gnest::GameSpec homogeneous_game(double eta1_hi = 2.0, double eta2_hi = 1.5) {
  return gnest::GameSpec::lq_homogeneous(gnest::StrategySet::make(0.0, 10.0),
                                         gnest::ParameterBox::make({0.1, 0.1}, {eta1_hi, eta2_hi}));
}

/// Midpoint rule on a uniform grid of `cells` cells.
template <class F>
double riemann(F&& f, std::size_t cells = 1000000) {
  const double h = 1.0 / static_cast<double>(cells);
  double acc = 0.0;
  for (std::size_t i = 0; i < cells; ++i) acc += f((static_cast<double>(i) + 0.5) * h);
  return acc * h;
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns all eigenvalues.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * x[k];
    x[i] = acc / a[i][i];
  }
  return x;
}

/// SBM LQ equilibrium per community from the linear system
/// s_k - eta_k sum_l Q_kl pi_l s_l = theta1, solved by elimination.
inline std::vector<double> sbm_equilibrium_oracle(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi, double theta1,
                                                  const std::vector<double>& eta) {
  const std::size_t k = eta.size();
  std::vector<std::vector<double>> a(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      a[i][j] = (i == j ? 1.0 : 0.0) - eta[i] * q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                                           pi[static_cast<Eigen::Index>(j)];
  return gauss_solve(a, std::vector<double>(k, theta1));
}

inline double sup_distance(const gnest::PiecewiseConstant& f, const gnest::PiecewiseConstant& g) {
  double m = 0.0;
  gnest::for_each_overlap(f, g, [&](double, double a, double b) { m = std::max(m, std::abs(a - b)); });
  return m;
}

}  // namespace testing_support
