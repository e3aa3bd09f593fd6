#include "orlicz/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "orlicz/errors.hpp"
#include "orlicz/kernels.hpp"
#include "orlicz/pushforward.hpp"

namespace orlicz {

namespace {

constexpr double kTailRel = 1e-12;
constexpr int kMaxDoublings = 12;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

[[noreturn]] void throw_divergent(double alpha) {
  throw NumericalError("partition function diverges: tail not certified at alpha = " + fmt(alpha));
}

}  // namespace

TiltFamily::TiltFamily(const Potential& p, GridDensity psi)
    : potential_(p), psi_(std::move(psi)), cache_(std::make_shared<Cache>()) {
  pmf_ = psi_.pmf();
  bounded_ = p.bounded_domain();
  if (psi_.closed_support) {
    log_norm_ = std::log(kernels::parallel::sum(pmf_));
  } else {
    log_norm_ = bounded_ ? std::log(p.domain_measure()) : 0.0;
  }
}

TiltFamily::TiltFamily(GridDensity base) : psi_(std::move(base)), cache_(std::make_shared<Cache>()) {
  psi_.closed_support = true;  // the grid is the whole law
  pmf_ = psi_.pmf();
  bounded_ = true;
  log_norm_ = std::log(kernels::parallel::sum(pmf_));
}

TiltFamily TiltFamily::for_level(const Potential& p, double t, std::size_t n_grid) {
  if (std::isfinite(p.t_sup())) return TiltFamily(p, build_psi(p, p.t_sup(), n_grid));
  double y_max = 32.0 * std::max(1.0, t);
  for (int i = 0; i <= kMaxDoublings; ++i, y_max *= 2.0) {
    TiltFamily tf(p, build_psi(p, y_max, n_grid));
    const double a = tf.solve_alpha(t);
    if (tf.tail_certified(a)) return tf;
  }
  throw NumericalError("no grid certifies the tail at level t = " + fmt(t));
}

TiltFamily TiltFamily::for_alpha(const Potential& p, double alpha, std::size_t n_grid) {
  if (std::isfinite(p.t_sup())) return TiltFamily(p, build_psi(p, p.t_sup(), n_grid));
  double y_max = 32.0 * std::max(1.0, 1.0 / std::max(std::abs(alpha), 1e-300));
  y_max = std::min(y_max, 1e6);
  for (int i = 0; i <= kMaxDoublings; ++i, y_max *= 2.0) {
    TiltFamily tf(p, build_psi(p, y_max, n_grid));
    if (tf.tail_certified(alpha)) return tf;
  }
  throw NumericalError("alpha beyond alpha_max: no grid certifies the tail at alpha = " + fmt(alpha));
}

double TiltFamily::t_crit() const {
  if (potential_) return potential_->t_crit();
  return W(0.0);
}

double TiltFamily::t_sup() const {
  if (potential_) return potential_->t_sup();
  if (!psi_.closed_support) return kInf;
  for (std::size_t i = psi_.size(); i-- > 0;) {
    if (psi_.values[i] > 0.0) return psi_.node(i);
  }
  return 0.0;
}

TiltPoint TiltFamily::evaluate(double alpha) const {
  {
    std::lock_guard lock(cache_->mu);
    if (auto it = cache_->points.find(alpha); it != cache_->points.end()) return it->second;
  }
  const auto s = kernels::parallel::tilt_sums(pmf_, psi_.y0, psi_.dy, alpha);
  const TiltPoint tp{s.log_z, s.mean, s.variance};
  std::lock_guard lock(cache_->mu);
  cache_->points.emplace(alpha, tp);
  return tp;
}

bool TiltFamily::tail_certified(double alpha) const {
  if (psi_.closed_support) return true;
  const std::size_t n = pmf_.size();
  const std::size_t seg = std::max<std::size_t>(8, n / 10);
  if (seg >= n) return false;
  const std::size_t first = n - seg;
  const double shift = std::max(alpha * psi_.y0, alpha * psi_.back());
  auto w = [&](std::size_t i) { return pmf_[i] * std::exp(alpha * psi_.node(i) - shift); };
  const double w_last = w(n - 2);  // the end node carries half weight
  const double w_first = w(first);
  if (w_last == 0.0) return true;
  if (w_first == 0.0) return false;
  const double r = std::pow(w_last / w_first, 1.0 / static_cast<double>(n - 2 - first));
  if (!(r < 1.0)) return false;
  const double tail = w_last * r / (1.0 - r);
  const double total = std::exp(evaluate(alpha).log_z - shift);
  return tail < kTailRel * total;
}

double TiltFamily::alpha_max_est() const {
  {
    std::lock_guard lock(cache_->mu);
    if (cache_->alpha_max) return *cache_->alpha_max;
  }
  double result = kInf;
  if (!psi_.closed_support) {
    std::vector<double> ladder;
    for (int j = 10; j >= -30; --j) ladder.push_back(-std::ldexp(1.0, j));
    for (int j = -30; j <= 10; ++j) ladder.push_back(std::ldexp(1.0, j));
    if (!tail_certified(ladder.front())) throw NumericalError("partition function diverges for every tested alpha");
    for (double a : ladder) {
      if (!tail_certified(a)) {
        result = a;
        break;
      }
    }
  }
  std::lock_guard lock(cache_->mu);
  cache_->alpha_max = result;
  return result;
}

double TiltFamily::log_partition(double alpha) const {
  if (!tail_certified(alpha)) {
    throw NumericalError("alpha beyond alpha_max: the tail of e^{alpha y} psi(y) is not certified at alpha = " +
                         fmt(alpha));
  }
  return evaluate(alpha).log_z;
}

double TiltFamily::partition(double alpha) const { return std::exp(log_partition(alpha)); }

double TiltFamily::sigma2(double alpha) const {
  const double h = 1e-4 * std::max(1.0, std::abs(alpha));
  auto central = [&](double step) {
    const auto a = kernels::parallel::tilt_sums(pmf_, psi_.y0, psi_.dy, alpha + step);
    const auto b = kernels::parallel::tilt_sums(pmf_, psi_.y0, psi_.dy, alpha - step);
    return (a.mean - b.mean) / (2.0 * step);
  };
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

double TiltFamily::solve_alpha(double t) const {
  if (!(t > 0.0)) throw DomainError("level t must be positive, got " + fmt(t));
  if (t >= t_sup()) throw DomainError("no tilt exists: t = " + fmt(t) + " is not below t_sup = " + fmt(t_sup()));
  const double tol = 1e-10 * std::max(1.0, t);
  if (bounded_ && std::abs(t - t_crit()) <= 1e-12 * std::max(1.0, t)) return 0.0;

  double lo = 0.0, hi = 0.0;
  const double w0 = W(0.0);
  if (std::abs(w0 - t) <= tol) return 0.0;
  if (w0 < t) {
    hi = 1.0;
    while (W(hi) < t) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) throw NumericalError("cannot bracket alpha for t = " + fmt(t));
    }
  } else {
    lo = -1.0;
    while (W(lo) > t) {
      hi = lo;
      lo *= 2.0;
      if (lo < -1e12) throw NumericalError("cannot bracket alpha for t = " + fmt(t));
    }
  }

  double x = 0.5 * (lo + hi);
  int newton = 0;
  for (int it = 0; it < 400; ++it) {
    const auto p = evaluate(x);
    const double f = p.w - t;
    if (std::abs(f) <= tol) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = 0.5 * (lo + hi);
    if (newton < 30 && p.var > 0.0) {
      ++newton;
      const double cand = x - f / p.var;
      if (cand > lo && cand < hi) next = cand;
    }
    if (next == x || hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  throw NumericalError("alpha solver did not converge for t = " + fmt(t));
}

RateResult TiltFamily::rate_function(double t) const {
  const double a = solve_alpha(t);
  const double log_z = log_partition(a) - log_norm_;
  const double I = t * a - log_z;
  return {bounded_ ? std::max(0.0, I) : I, sigma2(a), a};
}

GridDensity TiltFamily::tilted(double alpha) const {
  if (!tail_certified(alpha)) throw_divergent(alpha);
  return tilt_density(psi_, alpha);
}

GridDensity TiltFamily::gibbs_coordinate_density(double alpha, std::size_t n_s) const {
  if (!potential_) throw DomainError("the Gibbs coordinate density needs a potential");
  if (!tail_certified(alpha)) throw_divergent(alpha);
  const Potential& p = *potential_;
  const double y_cut = psi_.closed_support ? kInf : psi_.back();
  double s_lo = kInf, s_hi = -kInf;
  for (const auto& piece : p.pieces()) {
    const auto iv = std::isfinite(y_cut) ? piece.sublevel_interval(y_cut) : std::optional<Interval>(
                                                                              Interval{piece.lo(), piece.hi()});
    if (!iv) continue;
    s_lo = std::min(s_lo, iv->first);
    s_hi = std::max(s_hi, iv->second);
  }
  if (!std::isfinite(s_lo) || !std::isfinite(s_hi)) throw NumericalError("Gibbs s-grid is not bounded");
  const double ds = (s_hi - s_lo) / static_cast<double>(n_s);
  std::vector<double> v(n_s + 1);
  for (std::size_t i = 0; i <= n_s; ++i) {
    const double s = s_lo + static_cast<double>(i) * ds;
    const double y = p.eval(s);
    v[i] = std::isfinite(y) ? std::exp(alpha * y) : 0.0;
  }
  return GridDensity(s_lo, ds, std::move(v), true).normalized();
}

std::shared_ptr<const TiltFamily::Cdf> TiltFamily::cdf_for(double alpha) const {
  {
    std::lock_guard lock(cache_->mu);
    if (auto it = cache_->cdfs.find(alpha); it != cache_->cdfs.end()) return it->second;
  }
  const auto g = gibbs_coordinate_density(alpha);
  auto table = std::make_shared<Cdf>();
  table->s0 = g.y0;
  table->ds = g.dy;
  table->cdf.resize(g.size());
  long double acc = 0;
  table->cdf[0] = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    acc += 0.5L * g.dy * (static_cast<long double>(g.values[i - 1]) + g.values[i]);
    table->cdf[i] = static_cast<double>(acc);
  }
  for (double& c : table->cdf) c /= table->cdf.back();
  std::lock_guard lock(cache_->mu);
  return cache_->cdfs.emplace(alpha, std::move(table)).first->second;
}

double TiltFamily::sample_coordinate(double alpha, std::mt19937_64& rng) const {
  const auto table = cdf_for(alpha);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto& c = table->cdf;
  const auto it = std::upper_bound(c.begin(), c.end(), u);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - c.begin()), c.size() - 1);
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const double span = c[lo + 1] - c[lo];
  const double f = span > 0.0 ? (u - c[lo]) / span : 0.0;
  return table->s0 + (static_cast<double>(lo) + f) * table->ds;
}

}  // namespace orlicz
