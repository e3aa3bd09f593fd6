#include <doctest.h>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "orlicz/errors.hpp"
#include "orlicz/marginal_tv.hpp"
#include "orlicz/pushforward.hpp"
#include "orlicz/stats.hpp"

using namespace orlicz;

namespace {

GridDensity uniform01(std::size_t n) { return build_psi(Potential::abs_bounded(1.0), 1.0, n).normalized(); }
GridDensity exp1(double y_max, std::size_t n) { return tilt_density(build_psi(Potential::simplex(), y_max, n), -1.0); }

// Probability of [b*per*dy, (b+1)*per*dy] for each bin plus an overflow cell.
// Each lattice node carries the cell of width dy around it; at a bin edge the
// cell is split in half, except at the top of the support where only the lower
// half exists.
std::vector<double> bin_probs(const LatticeLaw& law, long long per, std::size_t bins) {
  std::vector<double> p(bins + 1, 0.0);
  const auto cell = [&](long long b) -> double& { return p[std::min<std::size_t>(static_cast<std::size_t>(b), bins)]; };
  for (std::size_t i = 0; i < law.pmf.size(); ++i) {
    const long long j = law.offset + static_cast<long long>(i);
    const long long b = j / per;
    if (j % per != 0 || b == 0) {
      cell(b) += law.pmf[i];
    } else if (j == law.last()) {
      cell(b - 1) += law.pmf[i];
    } else {
      cell(b) += 0.5 * law.pmf[i];
      cell(b - 1) += 0.5 * law.pmf[i];
    }
  }
  return p;
}

std::vector<double> counts_with_overflow(const std::vector<double>& xs, double hi, std::size_t bins) {
  auto c = stats::histogram(xs, 0.0, hi, bins);
  double over = 0.0;
  for (double x : xs) over += x >= hi ? 1.0 : 0.0;
  c.push_back(over);
  return c;
}

double irwin_hall_below(int n, int x) {
  using F = boost::multiprecision::cpp_bin_float_50;
  F acc = 0;
  for (int j = 0; j <= x; ++j) {
    F term = boost::math::binomial_coefficient<F>(n, j) * boost::multiprecision::pow(F(x - j), n);
    acc += (j % 2 ? -term : term);
  }
  return static_cast<double>(acc / boost::math::factorial<F>(n));
}

double Phi(double x) { return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2); }

// Q(theta) in closed form: the integrand changes sign at z^2 = -ln(1-theta)/theta.
double q_closed(double th) {
  const double v = 1.0 - th;
  const double c = std::sqrt(-v * std::log(v) / (1.0 - v));
  return 4.0 * (Phi(c / std::sqrt(v)) - Phi(c));
}

}  // namespace

TEST_CASE("conv_power: examples and invariants") {
  const auto u = uniform01(1u << 10);
  const auto tri = conv_power(u, 2);
  CHECK(tri.k == 2);
  CHECK(tri.density.back() == doctest::Approx(2.0));
  CHECK(tri.density.at(1.0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(conv_power(u, 1).density.values == u.values);
  const auto e = exp1(64.0, 1u << 13);
  for (int k : {2, 7, 60}) {
    const auto d = conv_power(e, k).density;
    CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.mean() == doctest::Approx(k * e.mean()).epsilon(1e-4));
    CHECK(d.variance() == doctest::Approx(k * e.variance()).epsilon(1e-3));
  }
  CHECK_THROWS_AS(conv_power(u, 0), DomainError);
}

TEST_CASE("conditioned sum: k = N is the truncated N-fold power") {
  const auto u = uniform01(1000);
  const int N = 10;
  const auto cond = condition_sum(u, N, N, 0.3, Side::le);
  CHECK(cond.frame_alpha < 0.0);
  const auto f = ConvEngine(u).power(N);
  std::vector<double> ref(f.pmf.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const long long j = f.offset + static_cast<long long>(i);
    ref[i] = f.pmf[i] * (j < 3000 ? 1.0 : j == 3000 ? 0.5 : 0.0);
    total += ref[i];
  }
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const long long j = f.offset + static_cast<long long>(i);
    err += std::abs(ref[i] / total - cond.law.at_index(j));
  }
  CHECK(err < 1e-9);
  CHECK(cond.log_prob == doctest::Approx(std::log(total)).epsilon(1e-9));
}

TEST_CASE("conditioned sum: uniform Monte Carlo, side <=") {
  const int N = 10, bins = 50, per = 80;
  const auto cond = condition_sum(uniform01(bins * per), N, 1, 0.5, Side::le);
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> xs;
  xs.reserve(5'100'000);
  for (int rep = 0; rep < 10'000'000; ++rep) {
    double s = 0.0, first = 0.0;
    for (int i = 0; i < N; ++i) {
      const double y = U(rng);
      if (i == 0) first = y;
      s += y;
    }
    if (s <= 0.5 * N) xs.push_back(first);
  }
  const auto counts = counts_with_overflow(xs, 1.0, bins);
  const auto probs = bin_probs(cond.law, per, bins);
  const auto chi = stats::chi_square_gof(counts, probs);
  CHECK(chi.p_value > 1e-3);
  CHECK(std::exp(cond.log_prob) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("conditioned sum: exponential Monte Carlo, side >") {
  const int N = 50, k = 2;
  const double t = 1.5, x = t * N;
  const auto base = exp1(64.0, 1u << 14);
  const auto cond = condition_sum(base, N, k, t, Side::gt);
  CHECK(cond.frame_alpha > 0.0);
  const double tail = boost::math::gamma_q(static_cast<double>(N), x);
  CHECK(std::exp(cond.log_prob) == doctest::Approx(tail).epsilon(1e-4));

  // exact sampler: S_N | S_N > x by inversion, then S_k / S_N ~ Beta(k, N - k)
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::gamma_distribution<double> ga(k, 1.0), gb(N - k, 1.0);
  std::vector<double> xs(1'000'000);
  for (double& v : xs) {
    const double s = boost::math::gamma_q_inv(static_cast<double>(N), tail * U(rng));
    const double a = ga(rng), b = gb(rng);
    v = s * a / (a + b);
  }
  const std::size_t bins = 48;
  const long long per = 64;  // 0.25 per bin at dy = 1/256
  REQUIRE(base.dy == doctest::Approx(1.0 / 256.0));
  const auto chi = stats::chi_square_gof(counts_with_overflow(xs, 12.0, bins), bin_probs(cond.law, per, bins));
  CHECK(chi.p_value > 1e-3);
}

TEST_CASE("conditioned sum: errors") {
  const auto u = uniform01(256);
  CHECK_THROWS_AS(condition_sum(u, 5, 6, 0.3, Side::le), DomainError);
  CHECK_THROWS_AS(condition_sum(u, 5, 0, 0.3, Side::le), DomainError);
  CHECK_THROWS_AS(condition_sum(u, 5, 2, 1.0, Side::gt), DomainError);
  CHECK_THROWS_AS(condition_sum(u, 5, 2, -1.0, Side::le), DomainError);
  // far beyond double range, still finite in the tilted frame
  const auto deep = condition_sum(u, 2000, 3, 0.05, Side::le);
  CHECK(deep.log_prob < std::log(1e-300));
  CHECK(std::isfinite(deep.log_prob));
}

TEST_CASE("subcritical comparisons") {
  SUBCASE("simplex N=1000 k=10") {
    const auto tf = TiltFamily::for_level(Potential::simplex(), 1.0);
    const auto r = tv_subcritical(tf, 1000, 10, 1.0);
    CHECK(r.regime == Regime::subcritical);
    const double ratio_xi = r.tv_exact / (xi_limit() * 10.0 / 1000.0);
    CHECK(ratio_xi >= 0.8);
    CHECK(ratio_xi <= 1.2);
    CHECK(r.ratio >= 0.8);
    CHECK(r.ratio <= 1.2);
    CHECK(r.truncation_tv >= 0.0);
    CHECK(r.truncation_tv < 1e-6);
    CHECK(r.alpha == doctest::Approx(-1.0).epsilon(1e-3));
  }
  SUBCASE("t = t_crit has no tilt") {
    const auto tf = TiltFamily::for_level(Potential::abs_bounded(1.0), 0.5, 1u << 12);
    const auto r = tv_subcritical(tf, 200, 3, 0.5);
    CHECK(r.regime == Regime::critical);
    CHECK(r.alpha == 0.0);
    CHECK(r.tv_exact >= 0.0);
  }
  SUBCASE("k = N stays in range") {
    const auto tf = TiltFamily::for_level(Potential::abs_bounded(1.0), 0.3, 1u << 10);
    const auto r = tv_subcritical(tf, 12, 12, 0.3);
    CHECK(r.tv_exact >= 0.0);
    CHECK(r.tv_exact <= 2.0);
  }
  SUBCASE("regime mismatch") {
    const auto tf = TiltFamily::for_level(Potential::abs_bounded(1.0), 0.75, 1u << 10);
    CHECK_THROWS_AS(tv_subcritical(tf, 40, 2, 0.75), DomainError);
    CHECK_THROWS_AS(tv_supercritical(tf, 40, 2, 0.4), DomainError);
  }
}

TEST_CASE("supercritical comparisons") {
  const auto tf = TiltFamily::for_level(Potential::abs_bounded(1.0), 0.75, 1u << 12);
  SUBCASE("Irwin-Hall tail") {
    const auto r = tv_supercritical(tf, 40, 2, 0.75);
    const double ih = irwin_hall_below(40, 10);
    CHECK(std::exp(r.log_tail) == doctest::Approx(ih).epsilon(1e-3));
    CHECK(r.regime == Regime::supercritical);
    // containment: the volume deficit bounds the TV
    CHECK(r.tv_exact <= 2.0 * std::exp(r.log_tail));
    CHECK(r.tv_factor <= 2.0);
    CHECK(r.direct_tv <= 2.0 * std::exp(r.log_tail) * (1.0 + 1e-9));
  }
  SUBCASE("ladder towards t_sup") {
    double prev = 3.0;
    for (double t : {0.6, 0.7, 0.8, 0.9, 0.95, 0.98}) {
      const auto r = tv_supercritical(tf, 40, 2, t);
      CHECK(r.tv_exact < prev);
      prev = r.tv_exact;
    }
  }
  SUBCASE("k = N") {
    const auto r = tv_supercritical(tf, 20, 20, 0.7);
    CHECK(r.tv_factor <= 2.0);
    CHECK(r.tv_factor >= 0.0);
  }
}

TEST_CASE("projection contraction and product subadditivity") {
  const auto tf = TiltFamily::for_level(Potential::abs_bounded(1.0), 0.4, 1u << 11);
  double prev = -1.0;
  for (int k : {1, 2, 4, 8, 16}) {
    const double tv = tv_subcritical(tf, 30, k, 0.4).tv_exact;
    CHECK(tv >= prev);
    prev = tv;
  }

  const auto base = uniform01(256);
  const auto tilted = tilt_density(base, -1.5);
  const auto p = base.pmf(), q = tilted.pmf();
  double one = 0.0, two = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    one += std::abs(p[i] - q[i]);
    for (std::size_t j = 0; j < p.size(); ++j) two += std::abs(p[i] * p[j] - q[i] * q[j]);
  }
  CHECK(two <= 2.0 * one);
  CHECK(two >= one);
}

TEST_CASE("xi constants") {
  CHECK(xi_limit() == doctest::Approx(0.4839414490382867).epsilon(1e-14));
  const double g = xi_integral([](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); });
  CHECK(std::abs(g - xi_limit()) < 1e-10);
  const auto e = exp1(64.0, 1u << 13);
  const auto c = xi_constants(e, 25);
  CHECK(std::abs(c.xi_k - c.xi) <= 0.1);
  CHECK(c.xi == xi_limit());
  const double lit = xi_constants(e, 25, true).xi_k;
  CHECK(lit > 0.0);
  CHECK(std::abs(lit - c.xi_k) > 0.05);
}

TEST_CASE("Q(theta)") {
  for (double th : {1e-4, 0.01, 0.1, 0.3, 0.5, 0.8, 0.95}) {
    CHECK(q_theta(th) == doctest::Approx(q_closed(th)).epsilon(1e-11));
  }
  CHECK(std::abs(q_theta(1e-3) / 1e-3 - 0.4839) <= 1e-3);
  CHECK(q_theta(1e-9) < 1e-8);
  CHECK_THROWS_AS(q_theta(1.0), DomainError);
  CHECK_THROWS_AS(q_theta(0.0), DomainError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> Z;
  const double th = 0.5;
  double s = 0.0, s2 = 0.0;
  const int n = 10'000'000;
  for (int i = 0; i < n; ++i) {
    const double z = Z(rng);
    const double v = std::abs(1.0 - std::sqrt(1.0 - th) * std::exp(0.5 * th * z * z));
    s += v;
    s2 += v * v;
  }
  const double m = s / n, sd = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(m - q_theta(th)) <= 3.0 * sd);
}

TEST_CASE("k rules") {
  CHECK(KSpec::parse("7").k_for(10) == 7);
  CHECK(KSpec::parse("sqrtN").k_for(1000) == 32);
  CHECK(KSpec::parse("sqrtN").k_for(1024) == 32);
  CHECK(KSpec::parse("thetaN:0.3").k_for(100) == 30);
  CHECK(KSpec::parse("thetaN:0.3").k_for(101) == 31);
  CHECK(KSpec::parse("thetaN:0.3").str() == "thetaN:0.3");
  CHECK_THROWS_AS(KSpec::parse("7").k_for(5), DomainError);
  for (const char* bad : {"0", "-2", "x", "thetaN:1.5", "thetaN:", "3.5"}) CHECK_THROWS_AS(KSpec::parse(bad), DomainError);
}

TEST_CASE("tv csv") {
  TVReport r;
  r.N = 40;
  r.k = 2;
  r.t = 0.75;
  r.regime = Regime::supercritical;
  r.tv_exact = 0.5;
  r.tv_predicted = 0.25;
  r.ratio = 2.0;
  r.xi_used = 0.125;
  std::ostringstream os;
  write_tv_csv(os, {r});
  CHECK(os.str() == "N,k,t,regime,tv_exact,tv_predicted,ratio,xi_used\n40,2,0.75,supercritical,0.5,0.25,2,0.125\n");
}

TEST_CASE("supercritical report stays finite where tv underflows") {
  const auto tf = TiltFamily::for_level(Potential::abs_bounded(1.0), 0.75, 1u << 12);
  const auto r = tv_report(tf, 2000, 1, 0.75);
  CHECK(r.tv_exact == 0.0);
  CHECK(std::isfinite(r.log_tv_exact));
  CHECK(r.log_tv_exact < -800.0);
  CHECK(r.ratio == doctest::Approx(0.1075).epsilon(0.01));
  CHECK(r.log_tv_exact == doctest::Approx(r.log_tail + std::log(r.tv_factor)));
}
