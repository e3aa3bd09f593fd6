#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace orlicz {

/// Non-negative density tabulated at nodes y0 + i*dy. Integrals use the
/// trapezoid rule, so the probability attached to node i is weight(i)*values[i]
/// with weight dy/2 at both ends and dy inside.
struct GridDensity {
  double y0 = 0.0;
  double dy = 1.0;
  std::vector<double> values;
  /// True when the grid reaches the end of the support (no truncated tail).
  bool closed_support = false;

  GridDensity() = default;
  GridDensity(double y0, double dy, std::vector<double> values, bool closed_support = false);

  /// Inverse of pmf(): values[i] = pmf[i] / weight(i).
  static GridDensity from_pmf(double y0, double dy, std::span<const double> pmf, bool closed_support = false);

  std::size_t size() const { return values.size(); }
  double node(std::size_t i) const { return y0 + static_cast<double>(i) * dy; }
  double back() const { return node(size() - 1); }
  double weight(std::size_t i) const;
  double pmf(std::size_t i) const { return weight(i) * values[i]; }
  std::vector<double> pmf() const;

  double mass() const;
  /// Moments of the normalized law, accumulated in long double.
  double mean() const;
  double variance() const;
  double central_moment(int j) const;
  double raw_moment(int j) const;

  GridDensity normalized() const;
  /// Linear interpolation between nodes, 0 outside the grid.
  double at(double y) const;

  void write_csv(std::ostream& os, const std::vector<std::string>& comments = {}) const;
};

/// Trapezoid integral of |a - b| over the union of both grids; the grids must
/// share dy and be offset by a whole number of steps.
double l1_distance(const GridDensity& a, const GridDensity& b);

}  // namespace orlicz
