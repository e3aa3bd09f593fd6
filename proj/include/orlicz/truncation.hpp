#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "orlicz/grid.hpp"

namespace orlicz {

/// Exponential envelope C e^{-c y} fitted to the last tenth of the support.
struct TailFit {
  double C = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  bool ok = false;
};
TailFit fit_tail(const GridDensity& base);

/// The base restricted to [0, L) and re-tilted by e^{alpha_L y} so that its
/// mean is the base mean.
struct TiltedTruncation {
  double L = 0.0;
  double alpha_L = 0.0;
  GridDensity density;
  /// The tail fit failed or Q(c/2, L) fell short of the mean, so the bracket
  /// was extended by doubling.
  bool bracket_extended = false;
  double c_env = 0.0;
};

/// Mean of the normalized base tilted by e^{alpha y} and restricted to nodes below L.
double truncated_mean(const GridDensity& base, double alpha, double L);
TiltedTruncation truncate(const GridDensity& base, double L);
double truncation_tv(const GridDensity& base, double L);
double moment_gap(const GridDensity& base, double L, int j);

struct TailMomentCheck {
  double tail;
  double bound;
  bool holds;
};
/// Integral of C s^kappa e^{-c s} over [L, inf) against C L^kappa e^{-cL} / (c - kappa/L).
TailMomentCheck tail_moment_check(double C, double c, double kappa, double L);
bool tail_moment_bound_check(double C, double c, double kappa, double L);

struct LadderRow {
  double L, alpha_L, tv, moment2_gap;
};
std::vector<LadderRow> truncation_ladder(const GridDensity& base, const std::vector<double>& levels);
void write_ladder_csv(std::ostream& os, const std::vector<LadderRow>& rows, const std::vector<std::string>& comments = {});

}  // namespace orlicz
