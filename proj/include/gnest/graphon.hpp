#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gnest/error.hpp"
#include "gnest/linalg.hpp"
#include "gnest/piecewise.hpp"

namespace gnest {

struct ConstantKernel {
  double c = 0.0;
};

/// Stochastic block model: community k occupies [sum_{j<k} pi_j, sum_{j<=k} pi_j).
struct SbmKernel {
  Eigen::MatrixXd q;
  Eigen::VectorXd pi;
};

/// Kernel constant on the cells of a uniform M x M grid.
struct GridKernel {
  Eigen::MatrixXd w;
};

/// Default resolution when rasterizing an analytic kernel.
inline constexpr std::size_t default_grid_resolution = 1000;

/// Cumulative community boundaries for weights pi, ending exactly at 1.
inline std::vector<double> community_breakpoints(const Eigen::VectorXd& pi) {
  std::vector<double> b(static_cast<std::size_t>(pi.size()) + 1, 0.0);
  for (Eigen::Index k = 0; k < pi.size(); ++k) b[k + 1] = b[k] + pi[k];
  b.back() = 1.0;
  return b;
}

inline std::vector<double> uniform_breakpoints(std::size_t m) {
  std::vector<double> b(m + 1);
  for (std::size_t i = 0; i <= m; ++i) b[i] = static_cast<double>(i) / static_cast<double>(m);
  b.back() = 1.0;
  return b;
}

/// Index of the cell of a partition containing x; x == 1 lands in the last cell.
inline std::size_t cell_index(const std::vector<double>& breaks, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "point must lie in [0,1]");
  auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  std::size_t j = static_cast<std::size_t>(it - breaks.begin());
  j = j == 0 ? 0 : j - 1;
  return std::min(j, breaks.size() - 2);
}

/// Finite-dimensional form of the graphon operator on a partition that
/// refines the kernel's own cells: (W f)_i = sum_j kernel(i,j) weights(j) f_j.
struct BlockOperator {
  std::vector<double> breaks;
  Eigen::VectorXd weights;
  Eigen::MatrixXd kernel;

  Eigen::Index size() const { return weights.size(); }
  Eigen::MatrixXd matrix() const { return kernel * weights.asDiagonal(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return kernel * weights.cwiseProduct(f); }
};

/// Symmetric kernel W on [0,1]^2.
class Graphon {
 public:
  using Kernel = std::variant<ConstantKernel, SbmKernel, GridKernel>;

  static Graphon constant(double c) { return Graphon(ConstantKernel{c}); }

  static Graphon sbm(Eigen::MatrixXd q, Eigen::VectorXd pi) {
    if (q.rows() == 0 || q.rows() != q.cols() || q.rows() != pi.size())
      throw Error(Errc::invalid_graphon, "SBM needs a square K x K matrix and K weights");
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      if (!(pi[k] > 0.0)) throw Error(Errc::invalid_graphon, "community weights must be positive");
    }
    return Graphon(SbmKernel{std::move(q), std::move(pi)});
  }

  static Graphon grid(Eigen::MatrixXd w) {
    if (w.rows() == 0 || w.rows() != w.cols())
      throw Error(Errc::invalid_graphon, "grid kernel must be a non-empty square matrix");
    return Graphon(GridKernel{std::move(w)});
  }

  /// Samples a kernel callable at the midpoints of an M x M grid.
  template <class KernelFn>
  static Graphon rasterize(KernelFn&& fn, std::size_t m = default_grid_resolution) {
    Eigen::MatrixXd w(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double y = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
        w(i, j) = fn(x, y);
      }
    }
    return grid(std::move(w));
  }

  const Kernel& kernel() const noexcept { return kernel_; }
  bool is_constant() const noexcept { return std::holds_alternative<ConstantKernel>(kernel_); }
  bool is_sbm() const noexcept { return std::holds_alternative<SbmKernel>(kernel_); }
  bool is_grid() const noexcept { return std::holds_alternative<GridKernel>(kernel_); }

  /// Breakpoints of the cells on which the kernel is constant.
  const std::vector<double>& natural_breakpoints() const noexcept { return breaks_; }

  double eval(double x, double y) const {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
      throw Error(Errc::out_of_domain, "graphon arguments must lie in [0,1]");
    if (const auto* c = std::get_if<ConstantKernel>(&kernel_)) return c->c;
    const std::size_t i = cell_index(breaks_, x);
    const std::size_t j = cell_index(breaks_, y);
    if (const auto* s = std::get_if<SbmKernel>(&kernel_)) return s->q(i, j);
    return std::get<GridKernel>(kernel_).w(i, j);
  }

  /// Block form on the natural partition refined by extra breakpoints.
  BlockOperator discretize(std::span<const double> extra = {}) const {
    const std::vector<double>& natural = breaks_;
    BlockOperator op;
    op.breaks = extra.empty() ? natural : merge_breakpoints(natural, extra);
    const Eigen::Index n = static_cast<Eigen::Index>(op.breaks.size()) - 1;
    op.weights.resize(n);
    std::vector<std::size_t> home(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      op.weights[i] = op.breaks[i + 1] - op.breaks[i];
      home[i] = cell_index(natural, 0.5 * (op.breaks[i] + op.breaks[i + 1]));
    }
    op.kernel.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) op.kernel(i, j) = natural_value(home[i], home[j]);
    }
    return op;
  }

 private:
  explicit Graphon(Kernel k) : kernel_(std::move(k)) {
    if (const auto* s = std::get_if<SbmKernel>(&kernel_))
      breaks_ = community_breakpoints(s->pi);
    else if (const auto* g = std::get_if<GridKernel>(&kernel_))
      breaks_ = uniform_breakpoints(static_cast<std::size_t>(g->w.rows()));
    else
      breaks_ = {0.0, 1.0};
  }

  double natural_value(std::size_t i, std::size_t j) const {
    if (const auto* c = std::get_if<ConstantKernel>(&kernel_)) return c->c;
    if (const auto* s = std::get_if<SbmKernel>(&kernel_)) return s->q(i, j);
    return std::get<GridKernel>(kernel_).w(i, j);
  }

  Kernel kernel_;
  std::vector<double> breaks_;
};

inline double eval(const Graphon& g, double x, double y) { return g.eval(x, y); }

/// (W f)(x) = int_0^1 W(x,y) f(y) dy, exact for step-function f. The result
/// is constant on the graphon's natural cells.
inline PiecewiseConstant apply_operator(const Graphon& g, const PiecewiseConstant& f) {
  if (const auto* c = std::get_if<ConstantKernel>(&g.kernel()))
    return PiecewiseConstant::constant(c->c * f.integral());
  const std::vector<double>& cells = g.natural_breakpoints();
  const std::vector<double> mass = cell_integrals(f, cells);
  const Eigen::Map<const Eigen::VectorXd> m(mass.data(), static_cast<Eigen::Index>(mass.size()));
  Eigen::VectorXd out;
  if (const auto* s = std::get_if<SbmKernel>(&g.kernel()))
    out = s->q * m;
  else
    out = std::get<GridKernel>(g.kernel()).w * m;
  return on_cells(cells, std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
}

/// Largest eigenvalue of the graphon operator.
///
/// Constant: c. SBM: symmetric eigensolve of Q Delta_pi. Grid: power iteration
/// on the cell-averaged operator.
inline double lambda_max(const Graphon& g, const PowerIterationOptions& opts = {}) {
  if (const auto* c = std::get_if<ConstantKernel>(&g.kernel())) return c->c;
  if (const auto* s = std::get_if<SbmKernel>(&g.kernel())) return weighted_kernel_lambda_max(s->q, s->pi);
  const Eigen::MatrixXd& w = std::get<GridKernel>(g.kernel()).w;
  const double inv_m = 1.0 / static_cast<double>(w.rows());
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { out.noalias() = inv_m * (w * v); };
  return power_iteration(apply, w.rows(), w.trace() * inv_m, opts).value;
}

/// ess sup_x int W(x,y) dy.
inline double sup_degree(const Graphon& g) {
  if (const auto* c = std::get_if<ConstantKernel>(&g.kernel())) return c->c;
  if (const auto* s = std::get_if<SbmKernel>(&g.kernel())) return (s->q * s->pi).maxCoeff();
  const Eigen::MatrixXd& w = std::get<GridKernel>(g.kernel()).w;
  return w.rowwise().sum().maxCoeff() / static_cast<double>(w.rows());
}

/// Human-readable violations of the graphon invariants; empty when valid.
inline std::vector<std::string> validate(const Graphon& g) {
  std::vector<std::string> issues;
  auto check_matrix = [&](const Eigen::MatrixXd& m) {
    if (!m.allFinite()) issues.emplace_back("non-finite kernel value");
    if (m.size() > 0 && (m.minCoeff() < 0.0 || m.maxCoeff() > 1.0))
      issues.emplace_back("kernel value outside [0,1]");
    if (m.size() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) issues.emplace_back("asymmetric");
  };
  if (const auto* c = std::get_if<ConstantKernel>(&g.kernel())) {
    if (!(c->c >= 0.0 && c->c <= 1.0)) issues.emplace_back("kernel value outside [0,1]");
  } else if (const auto* s = std::get_if<SbmKernel>(&g.kernel())) {
    check_matrix(s->q);
    if ((s->pi.array() <= 0.0).any() || std::abs(s->pi.sum() - 1.0) > 1e-12)
      issues.emplace_back("not a simplex");
  } else {
    check_matrix(std::get<GridKernel>(g.kernel()).w);
  }
  return issues;
}

/// Reads an M x M comma-separated matrix.
inline Graphon load_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open grid file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(Errc::io, "bad number '" + cell + "' in " + path);
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t m = rows.size();
  Eigen::MatrixXd w(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != m) throw Error(Errc::io, "grid file must be square: " + path);
    for (std::size_t j = 0; j < m; ++j) w(i, j) = rows[i][j];
  }
  return Graphon::grid(std::move(w));
}

}  // namespace gnest
