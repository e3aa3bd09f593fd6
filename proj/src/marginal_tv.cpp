#include "orlicz/marginal_tv.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "orlicz/errors.hpp"
#include "orlicz/kernels.hpp"
#include "orlicz/pushforward.hpp"
#include "orlicz/truncation.hpp"

namespace orlicz {

namespace {

struct Frame {
  GridDensity tilted;
  double log_z;
};

Frame tilt_frame(const GridDensity& b, double a) {
  const auto pmf = b.pmf();
  const auto s = kernels::parallel::tilt_sums(pmf, b.y0, b.dy, a);
  GridDensity g = b;
  for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = b.values[i] * std::exp(a * b.node(i) - s.log_z);
  return {std::move(g), s.log_z};
}

// T(Y) = sum_u f(u) e^{-a(u - Y)} w(u, Y), with w(u, Y) = clamp(Y - u + 1/2, 0, 1)
// the share of the lattice cell around u on the <= side of Y (1 - w on the >
// side). Running sums over the window give O(1) evaluation.
class SideSum {
 public:
  SideSum(const LatticeLaw& f, double a, Side side) : f_(f), a_(a), side_(side), acc_(f.pmf.size() + 1, 0.0) {
    const double ea = std::exp(a), ema = std::exp(-a);
    if (side == Side::le) {
      // acc_[i] = C(offset + i), C(I) = sum_{u < I} f(u) e^{a(I - u)}
      for (std::size_t i = 0; i < f.pmf.size(); ++i) acc_[i + 1] = ea * (acc_[i] + f.pmf[i]);
    } else {
      // acc_[i] = D(offset - 1 + i), D(I) = sum_{u > I} f(u) e^{-a(u - I)}
      for (std::size_t i = f.pmf.size(); i-- > 0;) acc_[i] = ema * (acc_[i + 1] + f.pmf[i]);
    }
  }

  double operator()(double Y) const {
    const double r = std::nearbyint(Y);
    const double d = Y - r;
    const auto I = static_cast<long long>(r);
    const double fI = f_.at_index(I);
    if (side_ == Side::le) {
      return std::exp(a_ * d) * (C(I) + (0.5 + d) * fI);
    }
    return std::exp(a_ * d) * (D(I) + (0.5 - d) * fI);
  }

 private:
  double C(long long I) const {
    if (I <= f_.offset) return 0.0;
    const long long top = f_.last() + 1;
    if (I <= top) return acc_[static_cast<std::size_t>(I - f_.offset)];
    return acc_.back() * std::exp(a_ * static_cast<double>(I - top));
  }
  double D(long long I) const {
    if (I >= f_.last()) return 0.0;
    const long long bottom = f_.offset - 1;
    if (I >= bottom) return acc_[static_cast<std::size_t>(I - bottom)];
    return acc_.front() * std::exp(-a_ * static_cast<double>(bottom - I));
  }

  const LatticeLaw& f_;
  double a_;
  Side side_;
  std::vector<double> acc_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void check_counts(int N, int k) {
  if (N < 1) throw DomainError("N must be at least 1");
  if (k < 1 || k > N) throw DomainError("k must satisfy 1 <= k <= N (k = " + std::to_string(k) + ", N = " + std::to_string(N) + ")");
}

double frame_alpha_for(const GridDensity& b, double t, Side side) {
  if (!(t > 0.0)) throw DomainError("level t must be positive, got " + fmt(t));
  const TiltFamily fam(b);
  if (t < fam.t_sup()) {
    const double a_t = fam.solve_alpha(t);
    return side == Side::le ? std::min(a_t, 0.0) : std::max(a_t, 0.0);
  }
  if (side == Side::gt) {
    throw DomainError("event S_N > tN is empty: t = " + fmt(t) + " reaches the top of the support");
  }
  return 0.0;
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "?";
}

Regime classify(double t, double t_crit) {
  if (!std::isfinite(t_crit)) return Regime::subcritical;
  if (std::abs(t - t_crit) <= 1e-12 * std::max(1.0, std::abs(t_crit))) return Regime::critical;
  return t < t_crit ? Regime::subcritical : Regime::supercritical;
}

ConvPower conv_power(const GridDensity& base, int k, ConvOptions opt) {
  if (k < 1) throw DomainError("convolution power k must be at least 1");
  const ConvEngine eng(base, opt);
  return {base, k, eng.power(k).density()};
}


double log_side_probability(const GridDensity& base, int N, double t, Side side, ConvOptions opt) {
  check_counts(N, 1);
  const GridDensity b = base.normalized();
  const double a_frame = frame_alpha_for(b, t, side);
  const Frame fr = tilt_frame(b, a_frame);
  const LatticeLaw full = ConvEngine(fr.tilted, opt).power(N);
  const double X = t * static_cast<double>(N) / b.dy;
  const double g = SideSum(full, a_frame * b.dy, side)(X);
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw NumericalError("tail probability underflows even in the tilted frame at t = " + fmt(t) + ", N = " +
                         std::to_string(N));
  }
  return static_cast<double>(N) * fr.log_z - a_frame * t * static_cast<double>(N) + std::log(g);
}

ConditionedSum condition_sum(const GridDensity& base, int N, int k, double t, Side side, ConvOptions opt) {
  check_counts(N, k);
  const GridDensity b = base.normalized();
  const double a_frame = frame_alpha_for(b, t, side);

  const Frame fr = tilt_frame(b, a_frame);
  const ConvEngine eng(fr.tilted, opt);
  ConditionedSum out;
  out.frame_alpha = a_frame;
  out.log_z = fr.log_z;
  out.fk = eng.power(k);
  const LatticeLaw rest = eng.power(N - k);
  const LatticeLaw full = k == N ? out.fk : eng.power(N);

  const double a = a_frame * b.dy;
  const double X = t * static_cast<double>(N) / b.dy;
  const SideSum t_rest(rest, a, side), t_full(full, a, side);
  const double denom = t_full(X);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw NumericalError("conditioning probability underflows even in the tilted frame at t = " + fmt(t) +
                         ", N = " + std::to_string(N));
  }
  out.log_prob = static_cast<double>(N) * fr.log_z - a_frame * t * static_cast<double>(N) + std::log(denom);

  out.ratio.resize(out.fk.pmf.size());
  out.law = out.fk;
  out.law.clip_mass = 0.0;
  long double mass = 0;
  for (std::size_t i = 0; i < out.ratio.size(); ++i) {
    const long long j = out.fk.offset + static_cast<long long>(i);
    out.ratio[i] = t_rest(X - static_cast<double>(j)) / denom;
    out.law.pmf[i] = out.fk.pmf[i] * out.ratio[i];
    mass += out.law.pmf[i];
  }
  if (std::abs(static_cast<double>(mass) - 1.0) > 1e-6) {
    throw NumericalError("conditioned sum lost mass (" + fmt(static_cast<double>(mass)) +
                         "); the convolution window is too narrow for this grid");
  }
  for (double& p : out.law.pmf) p = static_cast<double>(p / mass);
  return out;
}

GridDensity conditioned_sum_density(const GridDensity& base, int N, int k, double t, Side side, ConvOptions opt) {
  return condition_sum(base, N, k, t, side, opt).law.density();
}

double tv_laws(const LatticeLaw& p, const LatticeLaw& q) {
  const long long lo = std::min(p.offset, q.offset), hi = std::max(p.last(), q.last());
  long double acc = 0;
  for (long long j = lo; j <= hi; ++j) acc += std::abs(p.at_index(j) - q.at_index(j));
  return static_cast<double>(acc);
}

double direct_tv(const GridDensity& base, int N, int k, double t, double ref_alpha, ConvOptions opt) {
  const auto cond = condition_sum(base, N, k, t, Side::le, opt);
  const Frame ref = tilt_frame(base.normalized(), ref_alpha);
  return tv_laws(cond.law, ConvEngine(ref.tilted, opt).power(k));
}

KSpec KSpec::parse(const std::string& s) {
  KSpec out;
  if (s == "sqrtN") {
    out.rule = KRule::sqrt_n;
    return out;
  }
  const std::string pre = "thetaN:";
  if (s.rfind(pre, 0) == 0) {
    const std::string v = s.substr(pre.size());
    double th = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), th);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !(th > 0.0 && th < 1.0)) {
      throw DomainError("bad --k value '" + s + "': theta must lie in (0,1)");
    }
    out.rule = KRule::theta;
    out.theta = th;
    return out;
  }
  int k = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), k);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || k < 1) {
    throw DomainError("bad --k value '" + s + "': expected a positive integer, sqrtN or thetaN:<theta>");
  }
  out.k = k;
  return out;
}

int KSpec::k_for(int N) const {
  switch (rule) {
    case KRule::fixed:
      if (k > N) throw DomainError("k = " + std::to_string(k) + " exceeds N = " + std::to_string(N));
      return k;
    case KRule::sqrt_n: {
      int r = static_cast<int>(std::sqrt(static_cast<double>(N)));
      while (r * r > N) --r;
      while (r * r < N) ++r;
      return r;
    }
    case KRule::theta: {
      const double v = theta * static_cast<double>(N);
      const int r = static_cast<int>(std::ceil(v - 1e-9 * std::max(1.0, v)));
      return std::clamp(r, 1, N);
    }
  }
  return k;
}

std::string KSpec::str() const {
  switch (rule) {
    case KRule::fixed: return std::to_string(k);
    case KRule::sqrt_n: return "sqrtN";
    case KRule::theta: {
      std::ostringstream os;
      os << "thetaN:" << theta;
      return os.str();
    }
  }
  return "";
}

TVReport tv_subcritical(const TiltFamily& tf, int N, int k, double t, const TVOptions& opt) {
  check_counts(N, k);
  TVReport r;
  r.N = N;
  r.k = k;
  r.t = t;
  r.regime = classify(t, tf.t_crit());
  if (r.regime == Regime::supercritical) {
    throw DomainError("regime mismatch: t = " + fmt(t) + " exceeds t_crit = " + fmt(tf.t_crit()));
  }
  const GridDensity base = tf.psi().normalized();
  const auto cond = condition_sum(base, N, k, t, Side::le, opt.conv);
  r.alpha = cond.frame_alpha;
  r.tv_exact = tv_laws(cond.law, cond.fk);

  switch (opt.rule) {
    case KRule::fixed: {
      // standardized k-fold power of the level-tilted base, which is cond.fk
      const GridDensity g = cond.fk.density();
      const double m = g.mean(), sd = std::sqrt(g.variance());
      long double acc = 0;
      for (std::size_t i = 0; i < cond.fk.pmf.size(); ++i) {
        const double z = (cond.fk.y(i) - m) / sd;
        acc += cond.fk.pmf[i] * (opt.literal_xi ? std::abs(1.0 - z) : std::abs(1.0 - z * z));
      }
      r.xi_used = 0.5 * static_cast<double>(acc);
      r.tv_predicted = r.xi_used * k / N;
      r.note = opt.literal_xi ? "xi_k(alpha_t) with |1-z|" : "xi_k(alpha_t) read as xi_k under psi_alpha_t";
      break;
    }
    case KRule::sqrt_n:
      r.xi_used = xi_limit();
      r.tv_predicted = r.xi_used * k / N;
      r.note = "xi";
      break;
    case KRule::theta: {
      const double th = static_cast<double>(k) / N;
      if (k == N) throw DomainError("theta = k/N must stay below 1");
      r.xi_used = q_theta(th) / th;
      r.tv_predicted = q_theta(th);
      r.note = "Q(k/N)";
      break;
    }
  }
  r.ratio = r.tv_exact / r.tv_predicted;
  r.log_tv_exact = std::log(r.tv_exact);
  r.log_tv_predicted = std::log(r.tv_predicted);

  if (!tf.psi().closed_support && tf.potential()) {
    const double y_max = tf.psi().back();
    const auto wide = build_psi(*tf.potential(), 2.0 * y_max, 2 * (tf.psi().size() - 1));
    r.truncation_tv = truncation_tv(tilt_density(wide, r.alpha), y_max);
  }
  return r;
}

TVReport tv_supercritical(const TiltFamily& tf, int N, int k, double t, const TVOptions& opt) {
  check_counts(N, k);
  TVReport r;
  r.N = N;
  r.k = k;
  r.t = t;
  r.regime = classify(t, tf.t_crit());
  if (r.regime != Regime::supercritical || !(t < tf.t_sup())) {
    throw DomainError("regime mismatch: need t_crit < t < t_sup, got t = " + fmt(t) + " with t_crit = " +
                      fmt(tf.t_crit()) + ", t_sup = " + fmt(tf.t_sup()));
  }
  if (!tf.bounded()) throw DomainError("supercritical comparison needs a bounded domain");
  const GridDensity base = tf.psi().normalized();
  const auto gt = condition_sum(base, N, k, t, Side::gt, opt.conv);
  const LatticeLaw uni = ConvEngine(base, opt.conv).power(k);
  r.alpha = gt.frame_alpha;
  r.log_tail = gt.log_prob;
  r.tv_factor = tv_laws(gt.law, uni);
  r.tv_exact = std::exp(r.log_tail) * r.tv_factor;

  const auto rate = tf.rate_function(t);
  r.log_tv_exact = r.log_tail + std::log(r.tv_factor);
  r.log_tv_predicted = std::log(2.0) - rate.I * N - 0.5 * std::log(2.0 * std::numbers::pi * rate.sigma2 * N);
  r.tv_predicted = std::exp(r.log_tv_predicted);
  r.ratio = std::exp(r.log_tv_exact - r.log_tv_predicted);
  r.xi_used = std::numeric_limits<double>::quiet_NaN();

  const auto le = condition_sum(base, N, k, t, Side::le, opt.conv);
  r.direct_tv = tv_laws(le.law, uni);
  r.note = "tail times TV of the > side sum against psi_0^{*k}";
  return r;
}

TVReport tv_report(const TiltFamily& tf, int N, int k, double t, const TVOptions& opt) {
  return classify(t, tf.t_crit()) == Regime::supercritical ? tv_supercritical(tf, N, k, t, opt)
                                                             : tv_subcritical(tf, N, k, t, opt);
}

XiConstants xi_constants(const GridDensity& alpha_base, int k, bool literal, ConvOptions opt) {
  if (k < 1) throw DomainError("xi_k needs k >= 1");
  const LatticeLaw f = ConvEngine(alpha_base, opt).power(k);
  const GridDensity g = f.density();
  const double m = g.mean(), sd = std::sqrt(g.variance());
  long double acc = 0;
  for (std::size_t i = 0; i < f.pmf.size(); ++i) {
    const double z = (f.y(i) - m) / sd;
    acc += f.pmf[i] * (literal ? std::abs(1.0 - z) : std::abs(1.0 - z * z));
  }
  return {0.5 * static_cast<double>(acc), xi_limit()};
}

double xi_limit() { return std::sqrt(2.0 / (std::numbers::pi * std::numbers::e)); }

double xi_integral(const std::function<double(double)>& g) {
  using boost::math::quadrature::gauss_kronrod;
  boost::math::quadrature::exp_sinh<double> tail;
  const double mid = gauss_kronrod<double, 61>::integrate([&](double z) { return (1.0 - z * z) * g(z); }, -1.0, 1.0, 15,
                                                          1e-15);
  const double right = tail.integrate([&](double u) {
    const double z = 1.0 + u;
    return (z * z - 1.0) * g(z);
  });
  const double left = tail.integrate([&](double u) {
    const double z = -1.0 - u;
    return (z * z - 1.0) * g(z);
  });
  return 0.5 * (mid + right + left);
}

double q_theta(double theta) {
  if (!(theta > 0.0)) throw DomainError("Q(theta) needs theta > 0");
  if (!(theta < 1.0)) throw DomainError("Q(theta) diverges for theta >= 1");
  using boost::math::quadrature::gauss_kronrod;
  const double half_log = 0.5 * std::log1p(-theta);
  const double root = std::sqrt(-std::log1p(-theta) / theta);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  // 1 - sqrt(1-theta) e^{theta z^2/2}, without cancellation near theta = 0
  auto gap = [&](double z) { return -std::expm1(0.5 * theta * z * z + half_log); };
  auto phi = [&](double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); };
  const double inner = gauss_kronrod<double, 61>::integrate([&](double z) { return gap(z) * phi(z); }, 0.0, root, 15,
                                                            1e-15);
  boost::math::quadrature::exp_sinh<double> tail;
  // beyond the root: sqrt(1-theta) phi_{1/(1-theta)}(z) (1 - e^{-(theta z^2/2 + half_log)})
  const double outer = tail.integrate([&](double u) {
    const double z = root + u;
    const double x = 0.5 * theta * z * z + half_log;
    return inv_sqrt_2pi * std::exp(half_log - 0.5 * (1.0 - theta) * z * z) * -std::expm1(-x);
  });
  return 2.0 * (inner + outer);
}

void write_tv_csv(std::ostream& os, const std::vector<TVReport>& rows, const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "N,k,t,regime,tv_exact,tv_predicted,ratio,xi_used\n" << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.N << ',' << r.k << ',' << r.t << ',' << to_string(r.regime) << ',' << r.tv_exact << ',' << r.tv_predicted
       << ',' << r.ratio << ',' << r.xi_used << '\n';
  }
}

}  // namespace orlicz
