#include "orlicz/cramer.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "orlicz/errors.hpp"
#include "orlicz/marginal_tv.hpp"

namespace orlicz {

TailResult exact_tail(const GridDensity& base, int N, double t, ConvOptions opt) {
  if (N < 1) throw DomainError("N must be at least 1");
  const double lt = log_side_probability(base, N, t, Side::gt, opt);
  const bool under = lt < std::log(1e-300);
  return {lt, under ? 0.0 : std::exp(lt), under};
}

PetrovEstimate petrov_estimate(const TiltFamily& tf, int N, double t) {
  if (N < 1) throw DomainError("N must be at least 1");
  if (!(t > tf.W(0.0))) throw DomainError("the tail estimate needs t above the mean of the base");
  const auto r = tf.rate_function(t);
  const double lv = -N * r.I - 0.5 * std::log(2.0 * std::numbers::pi * r.sigma2 * N);
  return {lv, r.I, r.sigma2, r.alpha};
}

double skewness(const GridDensity& base) {
  const auto pmf = base.pmf();
  long double m0 = 0, m1 = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    m0 += pmf[i];
    m1 += pmf[i] * static_cast<long double>(base.node(i));
  }
  const long double mean = m1 / m0;
  long double c2 = 0, c3 = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const long double d = static_cast<long double>(base.node(i)) - mean;
    c2 += pmf[i] * d * d;
    c3 += pmf[i] * d * d * d;
  }
  c2 /= m0;
  c3 /= m0;
  return static_cast<double>(c3 / std::pow(c2, 1.5L));
}

double edgeworth_density(const GridDensity& base, int j, double s, bool literal) {
  if (j < 2) throw DomainError("edgeworth density needs j >= 2");
  const double kappa = skewness(base);
  const double c = literal ? kappa / std::sqrt(static_cast<double>(j)) : kappa / (6.0 * std::sqrt(static_cast<double>(j)));
  const double g = std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi);
  return g * (1.0 + c * (s * s * s - 3.0 * s));
}

std::vector<CramerRow> cramer_ladder(const GridDensity& base, const std::vector<int>& Ns, double t, ConvOptions opt) {
  const TiltFamily tf(base.normalized());
  std::vector<CramerRow> rows(Ns.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    const auto ex = exact_tail(base, Ns[i], t, opt);
    const auto pe = petrov_estimate(tf, Ns[i], t);
    rows[i] = {Ns[i], t, ex.log_tail, pe.log_value, std::exp(ex.log_tail - pe.log_value), pe.alpha};
  }
  return rows;
}

stats::LinearFit petrov_residual_fit(const std::vector<CramerRow>& rows, bool corrected) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    const double res = std::abs((corrected ? r.corrected_ratio() : r.ratio) - 1.0);
    if (!(res > 0.0)) continue;
    x.push_back(std::log(static_cast<double>(r.N)));
    y.push_back(std::log(res));
  }
  if (x.size() < 2) throw NumericalError("too few ladder points for the residual fit");
  return stats::linear_fit(x, y);
}

void write_cramer_csv(std::ostream& os, const std::vector<CramerRow>& rows, const std::vector<std::string>& comments,
                      const std::vector<std::string>& trailer) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "N,t,exact_tail_log,petrov_log,ratio\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.N << ',' << r.t << ',' << r.exact_tail_log << ',' << r.petrov_log << ',' << r.ratio << '\n';
  for (const auto& c : trailer) os << "# " << c << '\n';
}

}  // namespace orlicz
