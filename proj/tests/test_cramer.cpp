#include <doctest.h>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "orlicz/cramer.hpp"
#include "orlicz/errors.hpp"
#include "orlicz/pushforward.hpp"

using namespace orlicz;

namespace {

GridDensity uniform01(std::size_t n) { return build_psi(Potential::abs_bounded(1.0), 1.0, n).normalized(); }
GridDensity exp1(double y_max, std::size_t n) { return tilt_density(build_psi(Potential::simplex(), y_max, n), -1.0); }

}  // namespace

TEST_CASE("exact tail: closed forms") {
  const auto e = exp1(32.0, 1u << 17);
  const auto r = exact_tail(e, 100, 1.5);
  CHECK_FALSE(r.underflow);
  CHECK(r.tail == doctest::Approx(boost::math::gamma_q(100.0, 150.0)).epsilon(1e-6));

  // P(S_12 > 10.8) = P(S_12 < 1.2) = (1.2^12 - 12 * 0.2^12) / 12!
  const double ih = (std::pow(1.2, 12) - 12.0 * std::pow(0.2, 12)) / boost::math::factorial<double>(12);
  CHECK(exact_tail(uniform01(1u << 14), 12, 0.9).tail == doctest::Approx(ih).epsilon(1e-5));

  CHECK(exact_tail(uniform01(1000), 1, 0.3).tail == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(exact_tail(exp1(40.0, 1u << 14), 1, 2.0).tail == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
}

TEST_CASE("exact tail: underflow is flagged, not fatal") {
  const auto r = exact_tail(uniform01(1u << 10), 2000, 0.95);
  CHECK(r.underflow);
  CHECK(r.tail == 0.0);
  CHECK(std::isfinite(r.log_tail));
  CHECK(r.log_tail < -690.0);
}

TEST_CASE("exact tail: monotone ladders") {
  const auto e = exp1(40.0, 1u << 12);
  double prev = 1.0;
  for (double t : {1.1, 1.3, 1.6, 2.0, 2.5}) {
    const double lt = exact_tail(e, 60, t).log_tail;
    CHECK(lt < prev);
    prev = lt;
  }
  prev = 1.0;
  for (int N : {10, 20, 40, 80, 160}) {
    const double lt = exact_tail(e, N, 1.4).log_tail;
    CHECK(lt < prev);
    prev = lt;
  }
}

TEST_CASE("petrov estimate") {
  const TiltFamily tf(exp1(40.0, 1u << 17));
  const auto pe = petrov_estimate(tf, 100, 1.5);
  const double I = 0.5 - std::log(1.5);
  CHECK(pe.I == doctest::Approx(I).epsilon(1e-5));
  CHECK(pe.sigma2 == doctest::Approx(2.25).epsilon(1e-5));
  CHECK(pe.alpha == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
  CHECK(pe.log_value == doctest::Approx(-100.0 * I - 0.5 * std::log(2.0 * std::numbers::pi * 225.0)).epsilon(1e-6));
  CHECK_THROWS_AS(petrov_estimate(tf, 10, 0.5), DomainError);

  const auto rows = cramer_ladder(exp1(40.0, 1u << 14), {50, 100, 200, 400, 800}, 1.5);
  for (const auto& r : rows) {
    // the literal form misses the 1/alpha prefactor of a non-lattice tail
    CHECK(r.ratio * r.alpha == doctest::Approx(1.0).epsilon(5.0 / std::sqrt(r.N)));
  }
  // with the prefactor restored the residual is O(1/N), inside the O(N^{-1/2}) envelope
  const auto fit = petrov_residual_fit(rows, true);
  CHECK(fit.slope <= -0.35);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(0.15));
  // the literal ratio does not approach 1
  CHECK(rows.back().ratio == doctest::Approx(3.0).epsilon(0.01));
  CHECK(std::abs(rows.back().corrected_ratio() - 1.0) < std::abs(rows.front().corrected_ratio() - 1.0));
}

TEST_CASE("edgeworth density") {
  const auto u = uniform01(1u << 12);
  CHECK(std::abs(skewness(u)) < 1e-12);
  for (double s : {-2.0, 0.0, 0.7, 3.0}) {
    CHECK(edgeworth_density(u, 5, s) ==
          doctest::Approx(std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-11));
  }

  const auto e = exp1(64.0, 1u << 15);
  CHECK(skewness(e) == doctest::Approx(2.0).epsilon(1e-5));
  const int j = 30;
  const boost::math::gamma_distribution<double> g(j, 1.0);
  const double rj = std::sqrt(static_cast<double>(j));
  double gap_e = 0.0, gap_g = 0.0;
  for (double s = -5.0; s <= 8.0; s += 0.01) {
    const double x = j + rj * s;
    const double truth = x > 0.0 ? rj * boost::math::pdf(g, x) : 0.0;
    gap_e = std::max(gap_e, std::abs(edgeworth_density(e, j, s) - truth));
    gap_g = std::max(gap_g, std::abs(std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi) - truth));
  }
  CHECK(gap_e < gap_g);

  using boost::math::quadrature::gauss_kronrod;
  const double mass = gauss_kronrod<double, 61>::integrate([&](double s) { return edgeworth_density(e, j, s); }, -40.0,
                                                           40.0, 15, 1e-14);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(edgeworth_density(e, 1, 0.0), DomainError);
}

TEST_CASE("cramer csv") {
  std::ostringstream os;
  write_cramer_csv(os, {{50, 1.5, -10.5, -9.25, 3.5, 0.25}}, {"base exp"}, {"slope -0.5"});
  CHECK(os.str() == "# base exp\nN,t,exact_tail_log,petrov_log,ratio\n50,1.5,-10.5,-9.25,3.5\n# slope -0.5\n");
}
