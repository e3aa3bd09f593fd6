#pragma once

#include <cstddef>
#include <vector>

#include "orlicz/grid.hpp"

namespace orlicz {

/// A probability mass function on the lattice {index * dy}; pmf[i] sits at
/// index offset + i.
struct LatticeLaw {
  long long offset = 0;
  double dy = 1.0;
  std::vector<double> pmf;
  double clip_mass = 0.0;
  std::size_t transform_len = 0;

  double y(std::size_t i) const { return static_cast<double>(offset + static_cast<long long>(i)) * dy; }
  long long last() const { return offset + static_cast<long long>(pmf.size()) - 1; }
  /// pmf at a lattice index, 0 outside the stored window.
  double at_index(long long j) const {
    const long long i = j - offset;
    return (i < 0 || i >= static_cast<long long>(pmf.size())) ? 0.0 : pmf[static_cast<std::size_t>(i)];
  }
  GridDensity density() const;
};

struct ConvOptions {
  double z = 14.0;        // window half-width in standard deviations of the sum
  int max_log2 = 23;      // largest transform length 2^max_log2
  double clip_tol = 1e-8; // admissible negative ringing mass
  bool parallel = true;
};

/// m-fold convolution powers of one lattice law by transform-domain
/// exponentiation. Only a window of z standard deviations (plus one base
/// width) around the mean of the sum is resolved; mass outside the window is
/// below double precision and is folded harmlessly by the circular transform.
class ConvEngine {
 public:
  explicit ConvEngine(const GridDensity& base, ConvOptions opt = {});

  LatticeLaw power(int m) const;
  const LatticeLaw& base() const { return base_; }
  double mean_index() const { return mu_; }
  double sd_index() const { return sd_; }

 private:
  LatticeLaw base_;
  ConvOptions opt_;
  double mu_ = 0.0;  // relative to base_.offset
  double sd_ = 0.0;
};

/// Direct O(n^2) convolution of two lattice laws with equal dy; test reference.
LatticeLaw convolve_direct(const LatticeLaw& a, const LatticeLaw& b);

}  // namespace orlicz
