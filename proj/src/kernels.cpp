#include "orlicz/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace orlicz::kernels {

namespace {

double phase(double j, double a, double len) {
  const double turns = std::fmod(j * a, len) / len;
  return 2.0 * std::numbers::pi * turns;
}

std::complex<double> power_one(std::complex<double> x, std::size_t j, const PowerPhase& ph) {
  const double jd = static_cast<double>(j);
  const double len = static_cast<double>(ph.len);
  x *= std::polar(1.0, phase(jd, ph.mu, len));
  const double r = std::abs(x);
  if (r == 0.0) return {0.0, 0.0};
  const double mag = std::pow(r, ph.m);
  if (mag == 0.0) return {0.0, 0.0};
  return std::polar(mag, ph.m * std::arg(x) + phase(jd, ph.shift, len));
}

double shift_for(std::span<const double> pmf, double y0, double dy, double alpha) {
  const double last = y0 + dy * static_cast<double>(pmf.size() - 1);
  return std::max(alpha * y0, alpha * last);
}

struct Partial {
  long double s0 = 0, s1 = 0, s2 = 0;
};

Partial tilt_block(std::span<const double> pmf, std::size_t begin, std::size_t end, double y0, double dy,
                   double alpha, double shift, double ref) {
  Partial p;
  for (std::size_t i = begin; i < end; ++i) {
    if (pmf[i] == 0.0) continue;
    const double y = y0 + dy * static_cast<double>(i);
    const long double w = pmf[i] * std::exp(alpha * y - shift);
    const long double d = y - ref;
    p.s0 += w;
    p.s1 += w * d;
    p.s2 += w * d * d;
  }
  return p;
}

TiltSums finish(const Partial& p, double shift, double ref) {
  if (p.s0 <= 0) return {-std::numeric_limits<double>::infinity(), std::nan(""), std::nan("")};
  const long double m1 = p.s1 / p.s0;
  const long double var = p.s2 / p.s0 - m1 * m1;
  return {shift + static_cast<double>(std::log(p.s0)), static_cast<double>(ref + m1),
          static_cast<double>(std::max(var, 0.0L))};
}

double reference_point(std::span<const double> pmf, double y0, double dy) {
  return y0 + dy * static_cast<double>(pmf.size() - 1) * 0.5;
}

}  // namespace

namespace serial {

double sum(std::span<const double> x) {
  long double acc = 0;
  for (double v : x) acc += v;
  return static_cast<double>(acc);
}

TiltSums tilt_sums(std::span<const double> pmf, double y0, double dy, double alpha) {
  const double shift = shift_for(pmf, y0, dy, alpha);
  const double ref = reference_point(pmf, y0, dy);
  return finish(tilt_block(pmf, 0, pmf.size(), y0, dy, alpha, shift, ref), shift, ref);
}

void spectral_power(std::span<std::complex<double>> spec, const PowerPhase& ph) {
  for (std::size_t j = 0; j < spec.size(); ++j) spec[j] = power_one(spec[j], j, ph);
}

double clip_negative(std::span<double> x) {
  long double neg = 0;
  for (double& v : x) {
    if (v < 0.0) {
      neg -= v;
      v = 0.0;
    }
  }
  return static_cast<double>(neg);
}

}  // namespace serial

namespace parallel {

namespace {
std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }
}  // namespace

double sum(std::span<const double> x) {
  const std::size_t nb = block_count(x.size());
  std::vector<long double> part(nb, 0.0L);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t end = std::min(x.size(), (b + 1) * kBlock);
    long double acc = 0;
    for (std::size_t i = b * kBlock; i < end; ++i) acc += x[i];
    part[b] = acc;
  }
  long double total = 0;
  for (long double p : part) total += p;
  return static_cast<double>(total);
}

TiltSums tilt_sums(std::span<const double> pmf, double y0, double dy, double alpha) {
  const double shift = shift_for(pmf, y0, dy, alpha);
  const double ref = reference_point(pmf, y0, dy);
  const std::size_t nb = block_count(pmf.size());
  std::vector<Partial> part(nb);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < nb; ++b) {
    part[b] = tilt_block(pmf, b * kBlock, std::min(pmf.size(), (b + 1) * kBlock), y0, dy, alpha, shift, ref);
  }
  Partial total;
  for (const auto& p : part) {
    total.s0 += p.s0;
    total.s1 += p.s1;
    total.s2 += p.s2;
  }
  return finish(total, shift, ref);
}

void spectral_power(std::span<std::complex<double>> spec, const PowerPhase& ph) {
  const std::size_t n = spec.size();
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) spec[j] = power_one(spec[j], j, ph);
}

double clip_negative(std::span<double> x) {
  const std::size_t nb = block_count(x.size());
  std::vector<long double> part(nb, 0.0L);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t end = std::min(x.size(), (b + 1) * kBlock);
    long double neg = 0;
    for (std::size_t i = b * kBlock; i < end; ++i) {
      if (x[i] < 0.0) {
        neg -= x[i];
        x[i] = 0.0;
      }
    }
    part[b] = neg;
  }
  long double total = 0;
  for (long double p : part) total += p;
  return static_cast<double>(total);
}

}  // namespace parallel

}  // namespace orlicz::kernels
