#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace orlicz::stats {

struct ChiSquare {
  double statistic;
  double dof;
  double p_value;
};

/// Goodness of fit of counts against cell probabilities (renormalized).
/// Cells with expected count below `min_expected` are pooled with neighbours.
ChiSquare chi_square_gof(std::span<const double> counts, std::span<const double> probs, double min_expected = 5.0);

/// Homogeneity of two histograms on the same bins (possibly unequal totals).
ChiSquare chi_square_two_sample(std::span<const double> a, std::span<const double> b, double min_expected = 5.0);

/// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_sf(double x);

struct KsResult {
  double d;
  double p_value;
};
/// One-sample KS against a continuous CDF.
template <class Cdf>
KsResult ks_test(std::vector<double> xs, Cdf cdf);

struct LinearFit {
  double slope;
  double intercept;
  double r2;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Counts of samples in `bins` equal bins over [lo, hi]; samples outside are ignored.
std::vector<double> histogram(std::span<const double> xs, double lo, double hi, std::size_t bins);

}  // namespace orlicz::stats

#include <algorithm>
#include <cmath>

template <class Cdf>
orlicz::stats::KsResult orlicz::stats::ks_test(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}
