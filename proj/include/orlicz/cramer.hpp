#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "orlicz/convolution.hpp"
#include "orlicz/grid.hpp"
#include "orlicz/stats.hpp"
#include "orlicz/tilt.hpp"

namespace orlicz {

struct TailResult {
  double log_tail;
  double tail;     // 0 when flagged
  bool underflow;  // tail below 1e-300; only log_tail is meaningful
};
/// P(Y_1 + ... + Y_N > tN), Y_i i.i.d. from the normalized base.
TailResult exact_tail(const GridDensity& base, int N, double t, ConvOptions opt = {});

struct PetrovEstimate {
  double log_value;  // -N I(t) - log sqrt(2 pi sigma_t^2 N)
  double I;
  double sigma2;
  double alpha;
};
PetrovEstimate petrov_estimate(const TiltFamily& tf, int N, double t);

/// gaussian(s) (1 + kappa/(6 sqrt j) (s^3 - 3s)); literal drops the 1/6.
double edgeworth_density(const GridDensity& base, int j, double s, bool literal = false);
double skewness(const GridDensity& base);

struct CramerRow {
  int N;
  double t;
  double exact_tail_log;
  double petrov_log;
  double ratio;
  double alpha;
  /// exact over petrov divided by 1/alpha: the saddlepoint prefactor that
  /// the petrov form omits for non-lattice laws.
  double corrected_ratio() const { return ratio * alpha; }
};
std::vector<CramerRow> cramer_ladder(const GridDensity& base, const std::vector<int>& Ns, double t, ConvOptions opt = {});
/// Least squares of log|ratio - 1| against log N.
stats::LinearFit petrov_residual_fit(const std::vector<CramerRow>& rows, bool corrected = false);
void write_cramer_csv(std::ostream& os, const std::vector<CramerRow>& rows, const std::vector<std::string>& comments,
                      const std::vector<std::string>& trailer);

}  // namespace orlicz
