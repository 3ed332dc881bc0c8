#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gnest/error.hpp"

namespace gnest {

/// Breakpoints closer than this are treated as one when partitions are merged.
inline constexpr double breakpoint_merge_tol = 1e-12;

/// A step function on [0,1].
///
/// Interval j is [b_j, b_{j+1}); the last interval is closed so that f(1)
/// takes the last value. Values are immutable once constructed.
class PiecewiseConstant {
 public:
  /// Validating constructor. Throws Errc::malformed_partition.
  static PiecewiseConstant make(std::vector<double> breakpoints, std::vector<double> values) {
    if (breakpoints.size() < 2)
      throw Error(Errc::malformed_partition, "need at least two breakpoints");
    if (values.size() + 1 != breakpoints.size())
      throw Error(Errc::malformed_partition, "values must have one entry per interval");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
      throw Error(Errc::malformed_partition, "partition must start at 0 and end at 1");
    for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
      if (!(breakpoints[j] < breakpoints[j + 1]))
        throw Error(Errc::malformed_partition, "breakpoints must be strictly increasing");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw Error(Errc::malformed_partition, "values must be finite");
    }
    return PiecewiseConstant(std::move(breakpoints), std::move(values));
  }

  static PiecewiseConstant constant(double c) { return make({0.0, 1.0}, {c}); }

  /// Places s_i on [(i-1)/N, i/N).
  static PiecewiseConstant interpolate(std::span<const double> s) {
    if (s.empty()) throw Error(Errc::empty_vector, "cannot interpolate an empty vector");
    const std::size_t n = s.size();
    std::vector<double> breaks(n + 1);
    for (std::size_t i = 0; i <= n; ++i) breaks[i] = static_cast<double>(i) / static_cast<double>(n);
    breaks.back() = 1.0;
    return make(std::move(breaks), std::vector<double>(s.begin(), s.end()));
  }

  const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t intervals() const noexcept { return values_.size(); }
  double width(std::size_t j) const { return breaks_[j + 1] - breaks_[j]; }

  /// Index of the interval containing x (x == 1 maps to the last interval).
  std::size_t locate(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "x must lie in [0,1]");
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - breaks_.begin());
    j = j == 0 ? 0 : j - 1;
    return std::min(j, values_.size() - 1);
  }

  double operator()(double x) const { return values_[locate(x)]; }

  double integral() const {
    double acc = 0.0;
    for (std::size_t j = 0; j < values_.size(); ++j) acc += width(j) * values_[j];
    return acc;
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  PiecewiseConstant(std::vector<double> b, std::vector<double> v)
      : breaks_(std::move(b)), values_(std::move(v)) {}

  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// Union of two partitions of [0,1]; points within breakpoint_merge_tol of the
/// previously kept point are dropped.
inline std::vector<double> merge_breakpoints(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  std::vector<double> out;
  out.reserve(all.size());
  for (double x : all) {
    if (out.empty() || x - out.back() > breakpoint_merge_tol) out.push_back(x);
  }
  out.front() = 0.0;
  if (out.size() >= 2 && 1.0 - out[out.size() - 2] <= breakpoint_merge_tol) out.pop_back();
  out.back() = 1.0;
  return out;
}

/// Applies op pointwise on the merged partition of f and g.
template <class BinaryOp>
PiecewiseConstant combine(const PiecewiseConstant& f, const PiecewiseConstant& g, BinaryOp op) {
  std::vector<double> breaks = merge_breakpoints(f.breakpoints(), g.breakpoints());
  std::vector<double> values(breaks.size() - 1);
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double mid = 0.5 * (breaks[j] + breaks[j + 1]);
    values[j] = op(f(mid), g(mid));
  }
  return PiecewiseConstant::make(std::move(breaks), std::move(values));
}

/// Visits each interval of the merged partition as (width, f value, g value).
template <class Visitor>
void for_each_overlap(const PiecewiseConstant& f, const PiecewiseConstant& g, Visitor&& visit) {
  const std::vector<double> breaks = merge_breakpoints(f.breakpoints(), g.breakpoints());
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    const double mid = 0.5 * (breaks[j] + breaks[j + 1]);
    visit(breaks[j + 1] - breaks[j], f(mid), g(mid));
  }
}

inline PiecewiseConstant make_piecewise(std::vector<double> breakpoints, std::vector<double> values) {
  return PiecewiseConstant::make(std::move(breakpoints), std::move(values));
}

inline PiecewiseConstant interpolate_equilibrium(std::span<const double> s) {
  return PiecewiseConstant::interpolate(s);
}

/// Exact integral of f*g over [0,1].
inline double integrate_product(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  double acc = 0.0;
  for_each_overlap(f, g, [&](double w, double a, double b) { acc += w * a * b; });
  return acc;
}

/// Exact L2([0,1]) distance.
inline double l2_distance(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  double acc = 0.0;
  for_each_overlap(f, g, [&](double w, double a, double b) { acc += w * (a - b) * (a - b); });
  return std::sqrt(acc);
}

inline double l2_norm(const PiecewiseConstant& f) {
  double acc = 0.0;
  for (std::size_t j = 0; j < f.intervals(); ++j) acc += f.width(j) * f.values()[j] * f.values()[j];
  return std::sqrt(acc);
}

inline PiecewiseConstant operator+(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  return combine(f, g, [](double a, double b) { return a + b; });
}

inline PiecewiseConstant operator-(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  return combine(f, g, [](double a, double b) { return a - b; });
}

inline PiecewiseConstant operator*(double alpha, const PiecewiseConstant& f) {
  std::vector<double> v = f.values();
  for (double& x : v) x *= alpha;
  return PiecewiseConstant::make(f.breakpoints(), std::move(v));
}

/// Integral of f over each cell of a partition (cells given by breakpoints).
inline std::vector<double> cell_integrals(const PiecewiseConstant& f, std::span<const double> cells) {
  std::vector<double> mass(cells.size() - 1, 0.0);
  const std::vector<double> breaks = merge_breakpoints(f.breakpoints(), cells);
  std::size_t cell = 0;
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    const double mid = 0.5 * (breaks[j] + breaks[j + 1]);
    while (cell + 2 < cells.size() && mid >= cells[cell + 1]) ++cell;
    mass[cell] += (breaks[j + 1] - breaks[j]) * f(mid);
  }
  return mass;
}

/// Step function with the given values on the given cells.
inline PiecewiseConstant on_cells(std::span<const double> cells, std::span<const double> values) {
  return PiecewiseConstant::make(std::vector<double>(cells.begin(), cells.end()),
                                 std::vector<double>(values.begin(), values.end()));
}

}  // namespace gnest
