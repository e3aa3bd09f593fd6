#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "orlicz/convolution.hpp"
#include "orlicz/grid.hpp"
#include "orlicz/tilt.hpp"

namespace orlicz {

enum class Side { le, gt };
enum class Regime { subcritical, critical, supercritical };
std::string to_string(Regime r);
Regime classify(double t, double t_crit);

struct ConvPower {
  GridDensity base;
  int k = 0;
  GridDensity density;
};
ConvPower conv_power(const GridDensity& base, int k, ConvOptions opt = {});

/// Law of S_k = Y_1 + ... + Y_k given S_N <= tN (or > tN), Y_i i.i.d. from
/// the normalized base. Everything is evaluated in the frame tilted by
/// frame_alpha (the level tilt, clipped to the side where the event is rare),
/// so neither the event probability nor the tail ratios underflow.
struct ConditionedSum {
  LatticeLaw law;
  LatticeLaw fk;              // k-fold power of the frame-tilted base
  std::vector<double> ratio;  // law.pmf = fk.pmf * ratio
  double frame_alpha = 0.0;
  double log_z = 0.0;         // log E e^{frame_alpha Y}
  double log_prob = 0.0;      // log P(S_N on the chosen side of tN)
};
ConditionedSum condition_sum(const GridDensity& base, int N, int k, double t, Side side, ConvOptions opt = {});
/// log P(S_N <= tN) or log P(S_N > tN) for i.i.d. draws from the normalized base.
double log_side_probability(const GridDensity& base, int N, double t, Side side, ConvOptions opt = {});
GridDensity conditioned_sum_density(const GridDensity& base, int N, int k, double t, Side side,
                                    ConvOptions opt = {});

/// Sum of |p - q| over the union of the two lattice windows.
double tv_laws(const LatticeLaw& p, const LatticeLaw& q);

/// TV between S_k given S_N <= tN and the k-fold power of the base tilted by ref_alpha.
double direct_tv(const GridDensity& base, int N, int k, double t, double ref_alpha, ConvOptions opt = {});

enum class KRule { fixed, sqrt_n, theta };
struct KSpec {
  KRule rule = KRule::fixed;
  int k = 1;
  double theta = 0.0;

  /// "5", "sqrtN" or "thetaN:0.3".
  static KSpec parse(const std::string& s);
  int k_for(int N) const;
  std::string str() const;
};

struct TVReport {
  int N = 0, k = 0;
  double t = 0.0;
  Regime regime = Regime::subcritical;
  double tv_exact = 0.0;
  double tv_predicted = 0.0;
  double ratio = 0.0;
  double xi_used = 0.0;
  double log_tv_exact = 0.0;  // finite where tv_exact underflows
  double log_tv_predicted = 0.0;

  double alpha = 0.0;
  double log_tail = 0.0;       // log P(S_N > tN), supercritical only
  double tv_factor = 0.0;      // TV of the two conditioned sum laws, supercritical only
  double direct_tv = -1.0;     // TV of the <= side conditioned sum against psi_0^{*k}
  double truncation_tv = -1.0; // perturbation certificate for truncated unbounded grids
  std::string note;
};

struct TVOptions {
  KRule rule = KRule::fixed;
  bool literal_xi = false;
  ConvOptions conv;
};

TVReport tv_subcritical(const TiltFamily& tf, int N, int k, double t, const TVOptions& opt = {});
TVReport tv_supercritical(const TiltFamily& tf, int N, int k, double t, const TVOptions& opt = {});
/// Dispatches on the regime of t.
TVReport tv_report(const TiltFamily& tf, int N, int k, double t, const TVOptions& opt = {});

struct XiConstants {
  double xi_k;
  double xi;
};
/// xi_k is half the mean of |1 - z^2| (|1 - z| when literal) over the
/// standardized k-fold power of alpha_base.
XiConstants xi_constants(const GridDensity& alpha_base, int k, bool literal = false, ConvOptions opt = {});
double xi_limit();
/// Half the integral of |1 - z^2| g(z) for a continuous density g on the line.
double xi_integral(const std::function<double(double)>& g);
double q_theta(double theta);

void write_tv_csv(std::ostream& os, const std::vector<TVReport>& rows, const std::vector<std::string>& comments = {});

}  // namespace orlicz
