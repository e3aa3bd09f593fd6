#include "orlicz/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "orlicz/errors.hpp"
#include "orlicz/kernels.hpp"

namespace orlicz {

GridDensity::GridDensity(double y0_, double dy_, std::vector<double> values_, bool closed)
    : y0(y0_), dy(dy_), values(std::move(values_)), closed_support(closed) {
  if (!(dy > 0.0) || !std::isfinite(dy)) throw DomainError("grid step must be positive");
  if (values.empty()) throw DomainError("grid density needs at least one node");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw DomainError("grid density value at node " + std::to_string(i) + " is negative or not finite");
    }
  }
}

GridDensity GridDensity::from_pmf(double y0, double dy, std::span<const double> pmf, bool closed) {
  std::vector<double> v(pmf.begin(), pmf.end());
  if (v.size() == 1) {
    v[0] /= dy;
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] /= (i == 0 || i + 1 == v.size()) ? 0.5 * dy : dy;
  }
  return GridDensity(y0, dy, std::move(v), closed);
}

double GridDensity::weight(std::size_t i) const {
  if (values.size() == 1) return dy;
  return (i == 0 || i + 1 == values.size()) ? 0.5 * dy : dy;
}

std::vector<double> GridDensity::pmf() const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = pmf(i);
  return out;
}

double GridDensity::mass() const {
  const auto p = pmf();
  return kernels::parallel::sum(p);
}

double GridDensity::raw_moment(int j) const {
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long double w = pmf(i);
    num += w * std::pow(static_cast<long double>(node(i)), j);
    den += w;
  }
  return static_cast<double>(num / den);
}

double GridDensity::mean() const { return raw_moment(1); }

double GridDensity::central_moment(int j) const {
  long double den = 0, m1 = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long double w = pmf(i);
    den += w;
    m1 += w * node(i);
  }
  m1 /= den;
  long double num = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += pmf(i) * std::pow(static_cast<long double>(node(i)) - m1, j);
  }
  return static_cast<double>(num / den);
}

double GridDensity::variance() const { return central_moment(2); }

GridDensity GridDensity::normalized() const {
  const double m = mass();
  if (!(m > 0.0)) throw NumericalError("cannot normalize a density of zero mass");
  GridDensity out = *this;
  for (double& v : out.values) v /= m;
  return out;
}

double GridDensity::at(double y) const {
  const double u = (y - y0) / dy;
  if (u < 0.0 || u > static_cast<double>(size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i + 1 >= size()) return values.back();
  const double f = u - static_cast<double>(i);
  return (1.0 - f) * values[i] + f * values[i + 1];
}

void GridDensity::write_csv(std::ostream& os, const std::vector<std::string>& comments) const {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "y,value\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) os << node(i) << ',' << values[i] << '\n';
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  if (std::abs(a.dy - b.dy) > 1e-12 * a.dy) throw DomainError("l1_distance needs a common grid step");
  const double off = (b.y0 - a.y0) / a.dy;
  const long long shift = std::llround(off);
  if (std::abs(off - static_cast<double>(shift)) > 1e-6) throw DomainError("grids are not aligned");
  const long long na = static_cast<long long>(a.size());
  const long long nb = static_cast<long long>(b.size());
  const long long lo = std::min(0LL, shift);
  const long long hi = std::max(na, shift + nb);
  long double acc = 0;
  for (long long i = lo; i < hi; ++i) {
    const double pa = (i >= 0 && i < na) ? a.pmf(static_cast<std::size_t>(i)) : 0.0;
    const long long j = i - shift;
    const double pb = (j >= 0 && j < nb) ? b.pmf(static_cast<std::size_t>(j)) : 0.0;
    acc += std::abs(pa - pb);
  }
  return static_cast<double>(acc);
}

}  // namespace orlicz
