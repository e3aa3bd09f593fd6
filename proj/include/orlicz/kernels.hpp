#pragma once

#include <complex>
#include <cstddef>
#include <span>

// Hot loops of the pipeline. `serial` is the plain reference; `parallel` uses
// OpenMP over fixed-size blocks whose partial results are combined in block
// order, so its output does not depend on the thread count.
namespace orlicz::kernels {

inline constexpr std::size_t kBlock = 4096;

/// log Z, mean and variance of the lattice law proportional to pmf_i * exp(alpha * y_i).
struct TiltSums {
  double log_z;
  double mean;
  double variance;
};

/// Parameters of the centred transform-domain power; see conv engine.
struct PowerPhase {
  int m;            // exponent
  double mu;        // base mean in index units
  double shift;     // window start minus m*mu, index units
  std::size_t len;  // transform length
};

namespace serial {
double sum(std::span<const double> x);
TiltSums tilt_sums(std::span<const double> pmf, double y0, double dy, double alpha);
void spectral_power(std::span<std::complex<double>> spec, const PowerPhase& ph);
/// Sum of negative entries (returned as a positive number), entries clipped to 0.
double clip_negative(std::span<double> x);
}  // namespace serial

namespace parallel {
double sum(std::span<const double> x);
TiltSums tilt_sums(std::span<const double> pmf, double y0, double dy, double alpha);
void spectral_power(std::span<std::complex<double>> spec, const PowerPhase& ph);
double clip_negative(std::span<double> x);
}  // namespace parallel

}  // namespace orlicz::kernels
