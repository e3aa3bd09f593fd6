#include "orlicz/truncation.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <span>

#include "orlicz/errors.hpp"
#include "orlicz/kernels.hpp"
#include "orlicz/stats.hpp"

namespace orlicz {

namespace {

std::size_t first_node_at_or_above(const GridDensity& g, double L) {
  const double u = (L - g.y0) / g.dy;
  if (u <= 0.0) return 0;
  auto i = static_cast<std::size_t>(std::ceil(u - 1e-9));
  return std::min(i, g.size());
}

bool has_mass_from(const GridDensity& g, std::size_t i) {
  for (; i < g.size(); ++i) {
    if (g.values[i] > 0.0) return true;
  }
  return false;
}

}  // namespace

TailFit fit_tail(const GridDensity& base) {
  std::size_t last = base.size();
  while (last > 0 && base.values[last - 1] <= 0.0) --last;
  TailFit fit;
  if (last < 20) return fit;
  const std::size_t first = last - std::max<std::size_t>(10, last / 10);
  std::vector<double> x, y;
  for (std::size_t i = first; i < last; ++i) {
    if (base.values[i] <= 0.0) continue;
    x.push_back(base.node(i));
    y.push_back(std::log(base.values[i]));
  }
  if (x.size() < 5) return fit;
  const auto lf = stats::linear_fit(x, y);
  fit.c = -lf.slope;
  fit.C = std::exp(lf.intercept);
  fit.r2 = lf.r2;
  fit.ok = fit.c > 0.0 && lf.r2 >= 0.98;
  return fit;
}

double truncated_mean(const GridDensity& base, double alpha, double L) {
  const std::size_t cut = first_node_at_or_above(base, L);
  if (cut == 0) throw DomainError("no grid node below L");
  const auto pmf = base.pmf();
  return kernels::parallel::tilt_sums(std::span<const double>(pmf.data(), cut), base.y0, base.dy, alpha).mean;
}

TiltedTruncation truncate(const GridDensity& base_in, double L) {
  const GridDensity base = base_in.normalized();
  const double t = base.mean();
  if (!(L > t)) throw DomainError("truncation below the mean has no tilt: L must exceed the mean " + std::to_string(t));
  TiltedTruncation out;
  out.L = L;
  const std::size_t cut = first_node_at_or_above(base, L);
  out.density = base;
  for (std::size_t i = cut; i < out.density.size(); ++i) out.density.values[i] = 0.0;
  if (!has_mass_from(base, cut)) {
    out.alpha_L = 0.0;
    out.density = base;
    return out;
  }

  if (cut == 0 || !(base.node(cut - 1) > t)) {
    throw DomainError("truncation below the mean has no tilt: no grid node in (mean, L)");
  }
  const auto pmf = base.pmf();
  const std::span<const double> head(pmf.data(), cut);
  auto Q = [&](double a) { return kernels::parallel::tilt_sums(head, base.y0, base.dy, a).mean; };

  const TailFit fit = fit_tail(base);
  out.c_env = fit.c;
  double lo = 0.0;
  double hi = fit.ok ? 0.5 * fit.c : 1.0;
  out.bracket_extended = !fit.ok;
  while (Q(hi) < t) {
    out.bracket_extended = true;
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("cannot bracket the truncation tilt at L = " + std::to_string(L));
  }
  if (Q(0.0) >= t) {
    hi = 0.0;
  }
  for (int it = 0; it < 300 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (Q(mid) < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double a = std::abs(Q(lo) - t) <= std::abs(Q(hi) - t) ? lo : hi;
  out.alpha_L = a;
  const auto s = kernels::parallel::tilt_sums(head, base.y0, base.dy, a);
  for (std::size_t i = 0; i < cut; ++i) {
    out.density.values[i] = base.values[i] * std::exp(a * base.node(i) - s.log_z);
  }
  return out;
}

double truncation_tv(const GridDensity& base, double L) {
  const GridDensity b = base.normalized();
  const auto tr = truncate(b, L);
  long double acc = 0;
  for (std::size_t i = 0; i < b.size(); ++i) acc += std::abs(b.pmf(i) - tr.density.pmf(i));
  return static_cast<double>(acc);
}

double moment_gap(const GridDensity& base, double L, int j) {
  if (j < 1 || j > 8) throw DomainError("moment order must be in 1..8");
  const GridDensity b = base.normalized();
  const auto tr = truncate(b, L);
  return std::abs(b.raw_moment(j) - tr.density.raw_moment(j));
}

TailMomentCheck tail_moment_check(double C, double c, double kappa, double L) {
  if (!(C > 0.0) || !(c > 0.0) || kappa < 0.0) throw DomainError("tail moment check needs C > 0, c > 0, kappa >= 0");
  if (!(L > kappa / c)) throw DomainError("tail moment check needs L > kappa / c");
  boost::math::quadrature::exp_sinh<double> q;
  const double tail =
      C * std::exp(-c * L) * q.integrate([&](double u) { return std::pow(L + u, kappa) * std::exp(-c * u); });
  const double bound = C * std::pow(L, kappa) * std::exp(-c * L) / (c - kappa / L);
  return {tail, bound, tail <= bound * (1.0 + 1e-12)};
}

bool tail_moment_bound_check(double C, double c, double kappa, double L) {
  return tail_moment_check(C, c, kappa, L).holds;
}

std::vector<LadderRow> truncation_ladder(const GridDensity& base, const std::vector<double>& levels) {
  std::vector<LadderRow> rows(levels.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double L = levels[i];
    const auto tr = truncate(base, L);
    const GridDensity b = base.normalized();
    long double tv = 0;
    for (std::size_t j = 0; j < b.size(); ++j) tv += std::abs(b.pmf(j) - tr.density.pmf(j));
    rows[i] = {L, tr.alpha_L, static_cast<double>(tv), std::abs(b.raw_moment(2) - tr.density.raw_moment(2))};
  }
  return rows;
}

void write_ladder_csv(std::ostream& os, const std::vector<LadderRow>& rows, const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "L,alpha_L,tv,moment2_gap\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.L << ',' << r.alpha_L << ',' << r.tv << ',' << r.moment2_gap << '\n';
}

}  // namespace orlicz
