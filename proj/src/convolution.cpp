#include "orlicz/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <span>
#include <sstream>

#include "orlicz/errors.hpp"
#include "orlicz/kernels.hpp"

namespace orlicz {

namespace {

// FFTW's planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

template <class T>
struct FftwBuffer {
  T* data;
  explicit FftwBuffer(std::size_t n) : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!data) throw NumericalError("fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct Plan {
  fftw_plan p = nullptr;
  ~Plan() {
    if (p) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(p);
    }
  }
};

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 16;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace

GridDensity LatticeLaw::density() const {
  return GridDensity::from_pmf(static_cast<double>(offset) * dy, dy, pmf, true);
}

ConvEngine::ConvEngine(const GridDensity& base, ConvOptions opt) : opt_(opt) {
  const double off = base.y0 / base.dy;
  const long long offset = std::llround(off);
  if (std::abs(off - static_cast<double>(offset)) > 1e-9 * std::max(1.0, std::abs(off))) {
    throw DomainError("base grid origin must be a multiple of the grid step");
  }
  base_.offset = offset;
  base_.dy = base.dy;
  base_.pmf = base.pmf();
  const double total = kernels::parallel::sum(base_.pmf);
  if (!(total > 0.0)) throw DomainError("base density has zero mass");
  for (double& p : base_.pmf) p /= total;
  long double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < base_.pmf.size(); ++i) m1 += base_.pmf[i] * static_cast<long double>(i);
  for (std::size_t i = 0; i < base_.pmf.size(); ++i) {
    const long double d = static_cast<long double>(i) - m1;
    m2 += base_.pmf[i] * d * d;
  }
  mu_ = static_cast<double>(m1);
  sd_ = std::sqrt(static_cast<double>(m2));
}

LatticeLaw ConvEngine::power(int m) const {
  if (m < 0) throw DomainError("convolution power must be non-negative");
  if (m == 0) return LatticeLaw{0, base_.dy, {1.0}, 0.0, 0};
  if (m == 1) return base_;

  const long long n = static_cast<long long>(base_.pmf.size());
  const double md = static_cast<double>(m);
  const double half = opt_.z * sd_ * std::sqrt(md) + static_cast<double>(n - 1);
  const long long full = static_cast<long long>(m) * (n - 1);
  const long long lo = std::max(0LL, static_cast<long long>(std::floor(md * mu_ - half)));
  const long long hi = std::min(full, static_cast<long long>(std::ceil(md * mu_ + half)));
  const auto width = static_cast<std::size_t>(hi - lo + 1);
  const std::size_t len = next_pow2(std::max<std::size_t>(width, static_cast<std::size_t>(n)));
  if (len > (std::size_t{1} << opt_.max_log2)) {
    std::ostringstream os;
    os << "grid too fine for a " << m << "-fold convolution: transform length " << len << " exceeds 2^"
       << opt_.max_log2 << "; lower --grid-bits";
    throw NumericalError(os.str());
  }

  FftwBuffer<double> real(len);
  FftwBuffer<fftw_complex> spec(len / 2 + 1);
  Plan fwd, bwd;
  {
    std::lock_guard lock(planner_mutex());
    fwd.p = fftw_plan_dft_r2c_1d(static_cast<int>(len), real.data, spec.data, FFTW_ESTIMATE);
    bwd.p = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec.data, real.data, FFTW_ESTIMATE);
  }
  std::fill(real.data, real.data + len, 0.0);
  std::copy(base_.pmf.begin(), base_.pmf.end(), real.data);
  fftw_execute(fwd.p);

  std::span<std::complex<double>> s(reinterpret_cast<std::complex<double>*>(spec.data), len / 2 + 1);
  const kernels::PowerPhase ph{m, mu_, static_cast<double>(lo) - md * mu_, len};
  if (opt_.parallel) {
    kernels::parallel::spectral_power(s, ph);
  } else {
    kernels::serial::spectral_power(s, ph);
  }
  fftw_execute(bwd.p);

  LatticeLaw out;
  out.dy = base_.dy;
  out.offset = static_cast<long long>(m) * base_.offset + lo;
  out.transform_len = len;
  out.pmf.assign(real.data, real.data + width);
  const double inv = 1.0 / static_cast<double>(len);
  for (double& v : out.pmf) v *= inv;
  out.clip_mass = opt_.parallel ? kernels::parallel::clip_negative(out.pmf) : kernels::serial::clip_negative(out.pmf);
  if (!(out.clip_mass < opt_.clip_tol)) {
    std::ostringstream os;
    os << "grid too coarse for this k: negative ringing mass " << out.clip_mass << " in the " << m
       << "-fold convolution";
    throw NumericalError(os.str());
  }
  const double total = kernels::parallel::sum(out.pmf);
  for (double& v : out.pmf) v /= total;
  return out;
}

LatticeLaw convolve_direct(const LatticeLaw& a, const LatticeLaw& b) {
  if (std::abs(a.dy - b.dy) > 1e-12 * a.dy) throw DomainError("convolve_direct needs a common grid step");
  LatticeLaw out;
  out.dy = a.dy;
  out.offset = a.offset + b.offset;
  out.pmf.assign(a.pmf.size() + b.pmf.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.pmf.size(); ++i) {
    for (std::size_t j = 0; j < b.pmf.size(); ++j) out.pmf[i + j] += a.pmf[i] * b.pmf[j];
  }
  return out;
}

}  // namespace orlicz
