#include "orlicz/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "orlicz/errors.hpp"

namespace orlicz::stats {

namespace {

double chi2_sf(double x, double dof) {
  if (dof <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

}  // namespace

ChiSquare chi_square_gof(std::span<const double> counts, std::span<const double> probs, double min_expected) {
  if (counts.size() != probs.size() || counts.empty()) throw DomainError("chi-square needs matching non-empty bins");
  double n = 0.0, ptot = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    n += counts[i];
    ptot += probs[i];
  }
  double stat = 0.0;
  int cells = 0;
  double obs = 0.0, expct = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    obs += counts[i];
    expct += n * probs[i] / ptot;
    const bool last = i + 1 == counts.size();
    if (expct >= min_expected || last) {
      if (expct > 0.0) {
        stat += (obs - expct) * (obs - expct) / expct;
        ++cells;
      }
      obs = expct = 0.0;
    }
  }
  const double dof = cells - 1;
  return {stat, dof, chi2_sf(stat, dof)};
}

ChiSquare chi_square_two_sample(std::span<const double> a, std::span<const double> b, double min_expected) {
  if (a.size() != b.size() || a.empty()) throw DomainError("two-sample chi-square needs matching bins");
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
  }
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double stat = 0.0;
  int cells = 0;
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
    const bool last = i + 1 == a.size();
    const double pooled_expected = std::min(ca, cb);
    if (pooled_expected >= min_expected || last) {
      if (ca + cb > 0.0) {
        const double d = ka * ca - kb * cb;
        stat += d * d / (ca + cb);
        ++cells;
      }
      ca = cb = 0.0;
    }
  }
  const double dof = cells - 1;
  return {stat, dof, chi2_sf(stat, dof)};
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // the alternating series converges slowly here; use the theta-function form
    const double pi = std::acos(-1.0);
    double s = 0.0;
    for (int k = 1; k < 50; k += 2) s += std::exp(-k * k * pi * pi / (8.0 * x * x));
    return 1.0 - std::sqrt(2.0 * pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("linear fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return {slope, my - slope * mx, r2};
}

std::vector<double> histogram(std::span<const double> xs, double lo, double hi, std::size_t bins) {
  std::vector<double> h(bins, 0.0);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double x : xs) {
    if (x < lo || x > hi) continue;
    auto i = static_cast<std::size_t>((x - lo) / w);
    if (i >= bins) i = bins - 1;
    h[i] += 1.0;
  }
  return h;
}

}  // namespace orlicz::stats
