#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "orlicz/grid.hpp"
#include "orlicz/potential.hpp"

namespace orlicz {

struct TiltPoint {
  double log_z;  // log of the lattice sum of pmf * e^{alpha y}
  double w;      // mean of the tilted lattice law
  double var;    // its variance
};

struct RateResult {
  double I;
  double sigma2;
  double alpha;
};

/// Exponential family generated by a pushforward density psi (or any base
/// density on [0, inf)). All tilts are lattice tilts of the trapezoid pmf, so
/// W and the variance are the exact mean and variance of the law that the
/// convolution engine later raises to powers.
class TiltFamily {
 public:
  TiltFamily(const Potential& p, GridDensity psi);
  /// Family over a base density; the normalization is the base mass.
  explicit TiltFamily(GridDensity base);

  /// Grid for solving W(alpha) = t: y_max starts at 32*max(1,t) (t_sup when
  /// the range is bounded) and doubles until the tail certificate holds.
  static TiltFamily for_level(const Potential& p, double t, std::size_t n_grid = 1u << 14);
  /// Same doubling, certified at a given alpha.
  static TiltFamily for_alpha(const Potential& p, double alpha, std::size_t n_grid = 1u << 14);

  const GridDensity& psi() const { return psi_; }
  const std::optional<Potential>& potential() const { return potential_; }
  /// log of the normalizing measure: |D| for potentials with bounded domain,
  /// the base mass for base families, 0 when |D| is infinite.
  double log_norm() const { return log_norm_; }
  bool bounded() const { return bounded_; }
  double t_crit() const;
  double t_sup() const;

  /// Uncertified lattice evaluation (cached).
  TiltPoint evaluate(double alpha) const;
  bool tail_certified(double alpha) const;
  double alpha_max_est() const;

  double log_partition(double alpha) const;
  double partition(double alpha) const;
  double W(double alpha) const { return evaluate(alpha).w; }
  /// Central difference of W, Richardson extrapolated.
  double sigma2(double alpha) const;

  double solve_alpha(double t) const;
  RateResult rate_function(double t) const;

  /// Normalized e^{alpha y} psi(y).
  GridDensity tilted(double alpha) const;

  /// e^{alpha phi(s)} on an s-grid covering D intersected with {phi <= y_max of psi}.
  GridDensity gibbs_coordinate_density(double alpha, std::size_t n_s = 1u << 14) const;
  double sample_coordinate(double alpha, std::mt19937_64& rng) const;

 private:
  struct Cdf {
    double s0, ds;
    std::vector<double> cdf;
  };
  struct Cache {
    std::mutex mu;
    std::map<double, TiltPoint> points;
    std::map<double, std::shared_ptr<const Cdf>> cdfs;
    std::optional<double> alpha_max;
  };

  std::shared_ptr<const Cdf> cdf_for(double alpha) const;

  std::optional<Potential> potential_;
  GridDensity psi_;
  std::vector<double> pmf_;
  double log_norm_ = 0.0;
  bool bounded_ = false;
  std::shared_ptr<Cache> cache_;
};

}  // namespace orlicz
