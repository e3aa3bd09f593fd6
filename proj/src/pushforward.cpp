#include "orlicz/pushforward.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "orlicz/errors.hpp"
#include "orlicz/kernels.hpp"

namespace orlicz {

GridDensity build_psi(const Potential& p, double y_max, std::size_t n_grid) {
  if (!(y_max > 0.0) || !std::isfinite(y_max)) throw DomainError("build_psi needs a finite y_max > 0");
  if (n_grid < 256) throw DomainError("build_psi needs n_grid >= 256");
  const double dy = y_max / static_cast<double>(n_grid);
  const std::size_t n = n_grid + 1;
  const auto pieces = p.pieces();
  std::vector<double> values(n);
  std::vector<unsigned char> bad(n, 0);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double y = static_cast<double>(i) * dy;
    const double lo = i == 0 ? 0.0 : y - 0.5 * dy;
    const double hi = i + 1 == n ? y_max : y + 0.5 * dy;
    double cell = 0.0;
    for (const auto& piece : pieces) {
      const double a = piece.sublevel_measure(lo);
      const double b = piece.sublevel_measure(hi);
      if (!std::isfinite(b)) {
        bad[i] = 1;
        continue;
      }
      cell += b - a;
    }
    values[i] = std::max(cell, 0.0) / (hi - lo);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i]) {
      std::ostringstream os;
      os << "non-integrable singularity of psi in grid cell " << i << " around y = " << static_cast<double>(i) * dy
         << " (the potential has a piece of infinite length with bounded range)";
      throw DomainError(os.str());
    }
  }
  return GridDensity(0.0, dy, std::move(values), y_max >= p.t_sup());
}

double psi_at(const Potential& p, double y) {
  double total = 0.0;
  for (const auto& piece : p.pieces()) {
    const auto s = piece.inverse(y);
    if (!s) continue;
    const double d = std::abs(piece.deriv(*s));
    total += d == 0.0 ? kInf : 1.0 / d;
  }
  return total;
}

std::pair<double, double> change_of_variables_check(const Potential& p, const std::function<double(double)>& f,
                                                    double y_max, std::size_t n_grid) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  double lhs = 0.0;
  for (const auto& piece : p.pieces()) {
    const auto iv = piece.sublevel_interval(y_max);
    if (!iv) continue;
    const auto [a, b] = *iv;
    const auto h = [&](double s) { return f(piece.eval(s)); };
    if (std::isfinite(a) && std::isfinite(b)) {
      lhs += gauss_kronrod<double, 61>::integrate(h, a, b, 20, 1e-12);
    } else if (std::isfinite(a)) {
      exp_sinh<double> q;
      lhs += q.integrate([&](double u) { return h(a + u); });
    } else if (std::isfinite(b)) {
      exp_sinh<double> q;
      lhs += q.integrate([&](double u) { return h(b - u); });
    } else {
      exp_sinh<double> q;
      lhs += q.integrate([&](double u) { return h(u) + h(-u); });
    }
  }
  const GridDensity psi = build_psi(p, y_max, n_grid);
  long double rhs = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) rhs += psi.pmf(i) * f(psi.node(i));
  return {lhs, static_cast<double>(rhs)};
}

GridDensity tilt_density(const GridDensity& psi, double alpha, double alpha_max) {
  if (alpha >= alpha_max) {
    throw NumericalError("partition function diverges: alpha = " + std::to_string(alpha) +
                         " is at or beyond the alpha_max estimate " + std::to_string(alpha_max));
  }
  const auto pmf = psi.pmf();
  const auto sums = kernels::parallel::tilt_sums(pmf, psi.y0, psi.dy, alpha);
  if (!std::isfinite(sums.log_z)) throw NumericalError("partition function is zero or not finite");
  GridDensity out = psi;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = psi.values[i] * std::exp(alpha * psi.node(i) - sums.log_z);
  }
  return out;
}

}  // namespace orlicz
