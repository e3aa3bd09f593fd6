// Acceptance run: one PASS/FAIL line per criterion. `acceptance` runs all,
// `acceptance 3` runs one. Exit status is the number of failures.
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "orlicz/ball_sampler.hpp"
#include "orlicz/cramer.hpp"
#include "orlicz/experiments.hpp"
#include "orlicz/marginal_tv.hpp"
#include "orlicz/pushforward.hpp"
#include "orlicz/stats.hpp"
#include "orlicz/tilt.hpp"
#include "orlicz/truncation.hpp"

using namespace orlicz;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fails: " << what << "] ";
    }
  }
};

using mp = boost::multiprecision::cpp_bin_float_100;

// P(U_1 + ... + U_n <= x), alternating sum in 100 digit arithmetic
mp irwin_hall_cdf(int n, mp x) {
  if (x <= 0) return 0;
  if (x >= n) return 1;
  mp s = 0, c = 1, fact = 1;
  for (int j = 0; j <= n && j < x; ++j) {
    const mp term = c * pow(x - j, n);
    s += j % 2 ? -term : term;
    c = c * (n - j) / (j + 1);
  }
  for (int i = 2; i <= n; ++i) fact *= i;
  return s / fact;
}

double ih_double(int n, double x) { return irwin_hall_cdf(n, mp(x)).convert_to<double>(); }

double uniform_tilt_mean(double a) { return 1.0 / (1.0 - std::exp(-a)) - 1.0 / a; }

// ---- 1 -------------------------------------------------------------------------

void xi_constant(Outcome& o) {
  const double closed = std::sqrt(2.0 / (std::numbers::pi * std::numbers::e));
  const double lim = xi_limit();
  const double integ = xi_integral([](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); });
  const double h = 1e-3;
  const double slope = q_theta(h) / h;  // Q(0) = 0
  o.detail << "xi=" << std::setprecision(17) << lim << " integral=" << integ << " closed=" << closed
           << std::setprecision(6) << " Q(1e-3)/1e-3=" << slope << ' ';
  o.require(std::abs(lim - closed) <= 1e-12, "xi_limit vs closed form");
  o.require(std::abs(integ - closed) <= 1e-12, "gaussian xi integral vs closed form");
  o.require(std::abs(slope - closed) <= 1e-3, "finite-difference Q'(0)");
}

// ---- 2 -------------------------------------------------------------------------

void subcritical_rate(Outcome& o) {
  const auto p = Potential::simplex();
  const auto tf = TiltFamily::for_level(p, 1.0, 1u << 14);
  const double xi = xi_limit();
  double cp = 0.0;
  for (int N : {200, 400, 800, 1600, 3200}) {
    for (int k : {1, 2, 5, 10, static_cast<int>(std::ceil(std::sqrt(N)))}) {
      const auto r = tv_report(tf, N, k, 1.0);
      const double dev = std::abs(r.tv_exact * N / (xi * k) - 1.0);
      cp = std::max(cp, dev / (1.0 / std::sqrt(k) + 1.0 / std::sqrt(static_cast<double>(N - k))));
    }
  }
  TVOptions th;
  th.rule = KRule::theta;
  const int k = KSpec::parse("thetaN:0.3").k_for(1600);
  const auto r = tv_report(tf, 1600, k, 1.0, th);
  const double rel = std::abs(r.tv_exact / q_theta(0.3) - 1.0);
  o.detail << "fitted C'=" << cp << " theta row k=" << k << " tv=" << r.tv_exact << " Q(0.3)=" << q_theta(0.3)
           << " rel=" << rel << ' ';
  o.require(cp <= 10.0, "C' <= 10");
  o.require(rel <= 0.1, "theta row within 10% of Q(0.3)");
}

// ---- 3 -------------------------------------------------------------------------

void supercritical_rate(Outcome& o) {
  const auto p = Potential::abs_bounded(1.0);
  const auto base = build_psi(p, 1.0, 1u << 14).normalized();
  double worst = 0.0;
  for (double t : {0.6, 0.75}) {
    for (int N : {10, 20, 30, 40, 50, 60}) {
      const double lt = exact_tail(base, N, t).log_tail;
      const mp exact = 1 - irwin_hall_cdf(N, mp(t) * N);
      worst = std::max(worst, std::abs(std::expm1(lt - log(exact).convert_to<double>())));
    }
  }
  o.detail << "Irwin-Hall worst rel=" << worst << "; ";
  o.require(worst <= 1e-6, "tail factor vs Irwin-Hall to 1e-6");

  for (double t : {0.6, 0.75}) {
    const auto tf = TiltFamily::for_level(p, t, 1u << 14);
    std::vector<double> lx, ly;
    double lo = kInf, hi = 0.0;
    for (int N = 100; N <= 1000; N += 100) {
      const auto r = tv_report(tf, N, 1, t);
      lo = std::min(lo, r.ratio), hi = std::max(hi, r.ratio);
      lx.push_back(std::log(static_cast<double>(N)));
      ly.push_back(std::log(std::abs(r.ratio - 1.0)));
    }
    const auto f = stats::linear_fit(lx, ly);
    o.detail << "t=" << t << " ratio in [" << lo << ", " << hi << "] residual slope=" << f.slope << " r2=" << f.r2 << "; ";
    o.require(lo >= 0.5 && hi <= 2.0, "ratio in [0.5, 2] at t=" + std::to_string(t));
    o.require(f.slope < 0.0 && f.r2 >= 0.9, "ratio trends to 1 at t=" + std::to_string(t));
  }
}

// ---- 4 -------------------------------------------------------------------------

void quantitative_cramer(Outcome& o) {
  const auto base = tilt_density(build_psi(Potential::simplex(), 32.0, 1u << 17), -1.0).normalized();
  const auto ex = exact_tail(base, 100, 1.5);
  const double q = boost::math::gamma_q(100.0, 150.0);
  const double rel = std::abs(std::exp(ex.log_tail) / q - 1.0);
  o.detail << "exact_tail(100,1.5) rel err vs Q(100,150)=" << rel << "; ";
  o.require(rel <= 1e-6, "exact tail vs incomplete gamma to 1e-6");

  const auto rows = cramer_ladder(base, {50, 100, 200, 400, 800}, 1.5);
  double C = 0.0;
  for (const auto& r : rows) C = std::max(C, std::abs(r.ratio - 1.0) * std::sqrt(static_cast<double>(r.N)));
  const auto f = petrov_residual_fit(rows);
  const auto fc = petrov_residual_fit(rows, true);
  o.detail << "C=max|ratio-1|sqrt(N)=" << C << " residual slope=" << f.slope << " r2=" << f.r2
           << " (ratio x alpha: slope=" << fc.slope << ")";
  o.require(f.slope >= -0.65 && f.slope <= -0.35, "log-log residual slope in [-0.65, -0.35]");
}

// ---- 5 -------------------------------------------------------------------------

void truncation_decay(Outcome& o) {
  const auto e = tilt_density(build_psi(Potential::simplex(), 64.0, 1u << 14), -1.0);
  const auto rows = truncation_ladder(e, {6, 8, 10, 12, 14});
  std::vector<double> x, la, lt, lg;
  for (const auto& r : rows) {
    x.push_back(r.L);
    la.push_back(std::log(r.alpha_L));
    lt.push_back(std::log(r.tv));
    lg.push_back(std::log(r.moment2_gap));
  }
  const std::pair<const char*, std::vector<double>*> series[] = {{"alpha", &la}, {"tv", &lt}, {"moment2_gap", &lg}};
  for (const auto& [name, ys] : series) {
    const auto f = stats::linear_fit(x, *ys);
    o.detail << name << ": slope=" << f.slope << " r2=" << f.r2 << "; ";
    o.require(f.slope < 0.0 && f.r2 >= 0.98, std::string("log-linear decay of ") + name);
  }
  const auto u = build_psi(Potential::abs_bounded(1.0), 1.0, 1u << 14);
  for (double L : {1.5, 2.0}) {
    const auto tr = truncate(u, L);
    const double tv = truncation_tv(u, L);
    o.detail << "support in [0," << L << "): alpha=" << tr.alpha_L << " tv=" << tv << "; ";
    o.require(tr.alpha_L == 0.0 && tv == 0.0, "alpha = 0 and TV = 0 for a base inside [0, L)");
  }
}

// ---- 6 -------------------------------------------------------------------------

// L1 distance between the k-coordinate marginal of the uniform law on the
// ball (abs potential on [-1, 1]) and the product law with density
// e^{a|s|}/Z per coordinate, by midpoint quadrature on [0, 1]^k.
double brute_force_tv(int N, int k, double t, double a) {
  const double norm = std::abs(a) < 1e-300 ? 1.0 : (std::exp(a) - 1.0) / a;  // Z / 2
  const double pN = ih_double(N, t * N);
  const int M = k == 1 ? 200'000 : 4000;
  const double h = 1.0 / M;
  auto mu = [&](double u) { return (N - k == 0 ? (u <= t * N ? 1.0 : 0.0) : ih_double(N - k, t * N - u)) / pN; };
  auto gam = [&](double u) { return std::exp(a * u) / std::pow(norm, k); };
  // the integrand depends on u = sum |s_i| only; tabulate mu on a fine u grid
  const int U = 400'000;
  std::vector<double> mu_tab(U + 1);
  for (int i = 0; i <= U; ++i) mu_tab[i] = mu(k * static_cast<double>(i) / U);
  auto mu_at = [&](double u) {
    const double x = u / k * U;
    const int i = std::min(U - 1, static_cast<int>(x));
    return mu_tab[i] + (x - i) * (mu_tab[i + 1] - mu_tab[i]);
  };
  long double acc = 0;
  if (k == 1) {
    for (int i = 0; i < M; ++i) {
      const double u = (i + 0.5) * h;
      acc += std::abs(mu_at(u) - gam(u));
    }
    return static_cast<double>(acc * h);
  }
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      const double u = (i + 0.5) * h + (j + 0.5) * h;
      acc += std::abs(mu_at(u) - gam(u));
    }
  }
  return static_cast<double>(acc * h * h);
}

void pushforward_invariance(Outcome& o) {
  const auto p = Potential::abs_bounded(1.0);
  struct Instance {
    int N, k;
    double t;
  };
  const Instance inst[] = {{4, 1, 0.3}, {5, 2, 0.2}, {6, 2, 0.35}, {8, 1, 0.25}, {8, 2, 0.7}};
  for (const auto& in : inst) {
    const auto tf = TiltFamily::for_level(p, in.t, 1u << 10);
    const auto r = tv_report(tf, in.N, in.k, in.t);
    double one_d = 0.0, a = 0.0;
    if (r.regime == Regime::supercritical) {
      one_d = r.direct_tv;  // against the uniform product law
    } else {
      one_d = r.tv_exact;
      std::uintmax_t iters = 200;
      const auto br = boost::math::tools::toms748_solve([&](double x) { return uniform_tilt_mean(x) - in.t; }, -500.0,
                                                        -1e-6, boost::math::tools::eps_tolerance<double>(52), iters);
      a = 0.5 * (br.first + br.second);
    }
    const double direct = brute_force_tv(in.N, in.k, in.t, a);
    o.detail << "(N=" << in.N << ",k=" << in.k << ",t=" << in.t << ") 1-D=" << one_d << " direct=" << direct << "; ";
    o.require(std::abs(one_d - direct) <= 1e-3, "instance N=" + std::to_string(in.N) + " k=" + std::to_string(in.k));
  }
}

// ---- 7 -------------------------------------------------------------------------

void sampler_cross_validation(Outcome& o) {
  const auto abs1 = Potential::abs_bounded(1.0);
  SamplerConfig rc;
  rc.method = SamplerMethod::rejection_uniform;
  rc.N = 3;
  rc.t = 0.4;
  rc.seed = 20240601;
  SamplerConfig gc = rc;
  gc.method = SamplerMethod::coordinate_gibbs;
  gc.thin = 5;
  gc.seed = 20240602;
  const auto a = draw_samples(abs1, rc, 100'000).column(0);
  const auto b = draw_samples(abs1, gc, 100'000).column(0);
  const auto chi = stats::chi_square_two_sample(stats::histogram(a, -1.0, 1.0, 40), stats::histogram(b, -1.0, 1.0, 40));
  o.detail << "rejection vs Gibbs chi-square p=" << chi.p_value << "; ";
  o.require(chi.p_value > 1e-3, "rejection and Gibbs marginals agree");

  SamplerConfig sc;
  sc.method = SamplerMethod::coordinate_gibbs;
  sc.N = 2000;
  sc.t = 1.0;
  sc.seed = 20240603;
  const auto xs = draw_samples(Potential::simplex(), sc, 100'000).column(0);
  const std::size_t n = 1u << 14;
  std::vector<double> ex(n + 1);
  for (std::size_t i = 0; i <= n; ++i) ex[i] = std::exp(-20.0 * static_cast<double>(i) / n);
  const GridDensity exp1(0.0, 20.0 / n, ex);
  const auto mt = empirical_marginal_tv(xs, exp1, 50);
  const double allowed = mt.envelope + xi_limit() / sc.N;
  o.detail << "simplex N=2000 binned TV=" << mt.tv << " allowed=" << allowed << " (envelope " << mt.envelope << ")";
  o.require(mt.tv <= allowed, "first coordinate within envelope + xi/N of Exp(1)");
}

// ---- 8 -------------------------------------------------------------------------

void phase_transition(Outcome& o) {
  ExperimentConfig c;
  c.out = std::filesystem::temp_directory_path() / "orlicz_acceptance_phase";
  c.potential = "builtin:abs,1";
  c.t_grid = std::vector<double>{0.3, 0.4, 0.5, 0.6, 0.75};
  c.n_grid = std::vector<int>{100, 200, 500, 1000, 2000};
  c.k = std::vector<std::string>{"1"};
  c.timestamp = false;
  cmd_phase_sweep(c);
  for (const auto& f : read_phase_fits(c.out / "phase_sweep.csv")) {
    if (f.t > 0.5) {
      o.detail << "t=" << f.t << " " << f.model << " exp r2=" << f.exp_fit.r2 << " slope=" << f.exp_fit.slope
               << " (-I=" << f.minus_I << "); ";
      o.require(f.model == "exponential" && f.exp_fit.r2 >= 0.95, "exponential decay at t=" + std::to_string(f.t));
    } else {
      o.detail << "t=" << f.t << " " << f.model << " log-log slope=" << f.power_fit.slope << " r2=" << f.power_fit.r2
               << "; ";
      o.require(f.model == "power" && f.power_fit.r2 >= 0.95 && std::abs(f.power_fit.slope + 1.0) <= 0.25,
                "1/N decay at t=" + std::to_string(f.t));
    }
  }
  std::filesystem::remove_all(c.out);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"xi constant", xi_constant},
      {"subcritical rate", subcritical_rate},
      {"supercritical rate", supercritical_rate},
      {"quantitative Cramer", quantitative_cramer},
      {"truncation", truncation_decay},
      {"pushforward invariance", pushforward_invariance},
      {"sampler cross-validation", sampler_cross_validation},
      {"phase transition", phase_transition},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i) + 1) continue;
    Outcome o;
    o.detail << std::setprecision(6);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << ", "
              << std::setprecision(3) << secs << " s): " << o.detail.str() << std::endl;
  }
  return failures;
}
