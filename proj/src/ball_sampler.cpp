#include "orlicz/ball_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "orlicz/errors.hpp"
#include "orlicz/stats.hpp"

namespace orlicz {

namespace {

constexpr std::uint64_t kRejectionWindow = 10'000'000;
constexpr double kMinAcceptance = 1e-6;

std::mt19937_64 chain_rng(std::uint64_t seed, std::uint64_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain), static_cast<std::uint32_t>(chain >> 32)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) { return std::generate_canonical<double, 53>(rng); }

}  // namespace

std::string to_string(SamplerMethod m) {
  return m == SamplerMethod::rejection_uniform ? "rejection_uniform" : "coordinate_gibbs";
}

SamplerMethod parse_sampler_method(const std::string& s) {
  if (s == "rejection_uniform" || s == "rejection") return SamplerMethod::rejection_uniform;
  if (s == "coordinate_gibbs" || s == "gibbs") return SamplerMethod::coordinate_gibbs;
  throw DomainError("unknown sampler method '" + s + "' (rejection_uniform or coordinate_gibbs)");
}

BallSampler::BallSampler(const Potential& p, const SamplerConfig& cfg) : BallSampler(p, cfg, chain_rng(cfg.seed, 0)) {}

BallSampler::BallSampler(const Potential& p, const SamplerConfig& cfg, std::mt19937_64 rng)
    : p_(p), cfg_(cfg), rng_(std::move(rng)) {
  if (cfg_.N < 1) throw DomainError("sampler needs N >= 1");
  if (!(cfg_.t > 0.0)) throw DomainError("sampler needs t > 0");
  if (cfg_.thin < 1) throw DomainError("thin must be at least 1");
  const auto min_burn = static_cast<std::size_t>(10) * static_cast<std::size_t>(cfg_.N);
  if (cfg_.burn_in == 0) cfg_.burn_in = min_burn;
  if (cfg_.method == SamplerMethod::coordinate_gibbs && cfg_.burn_in < min_burn) {
    throw DomainError("coordinate_gibbs needs burn_in >= 10 N sweeps");
  }
  trivial_ = cfg_.t >= p_.t_sup();
  if (cfg_.method == SamplerMethod::rejection_uniform || trivial_) {
    if (!p_.bounded_domain()) throw DomainError("rejection_uniform needs a domain of finite measure");
    double cum = 0.0;
    for (const auto& piece : p_.pieces()) lengths_cum_.push_back(cum += piece.length());
  }
  budget_ = cfg_.t * cfg_.N;
}

double BallSampler::draw_coordinate() {
  const double total = lengths_cum_.back();
  const double u = uniform01(rng_) * total;
  const auto it = std::upper_bound(lengths_cum_.begin(), lengths_cum_.end(), u);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - lengths_cum_.begin()), lengths_cum_.size() - 1);
  const auto& piece = p_.pieces()[k];
  const double before = k == 0 ? 0.0 : lengths_cum_[k - 1];
  return std::clamp(piece.lo() + (u - before), piece.lo(), piece.hi());
}

void BallSampler::rejection(std::span<double> out) {
  for (;;) {
    ++proposals_;
    double sum = 0.0;
    std::size_t i = 0;
    // the remaining coordinates of a rejected proposal are never looked at, so
    // stopping early leaves the accepted law unchanged
    for (; i < out.size() && sum <= budget_; ++i) {
      out[i] = draw_coordinate();
      sum += p_.eval(out[i]);
    }
    if (i == out.size() && sum <= budget_) {
      ++accepted_;
      return;
    }
    if (proposals_ >= kRejectionWindow &&
        static_cast<double>(accepted_) < kMinAcceptance * static_cast<double>(proposals_)) {
      throw NumericalError("rejection acceptance below 1e-6 after 1e7 proposals; use coordinate_gibbs");
    }
  }
}

void BallSampler::start_chain() {
  const auto mins = p_.minimizers();
  if (mins.empty()) throw NumericalError("potential has no minimizer to start the Gibbs scan");
  double s0 = mins.front();
  if (cfg_.start == GibbsStart::level) {
    // the largest value of phi not above the level, attained on some piece
    const double level = cfg_.t * (1.0 - 1e-9);
    double best = p_.eval(s0);
    for (const auto& piece : p_.pieces()) {
      if (piece.range_lo() > level) continue;
      const double y = std::min(level, piece.range_hi());
      const auto r = piece.inverse(y);
      if (!r) continue;
      const double v = piece.eval(*r);
      if (v <= level && v > best) best = v, s0 = *r;
    }
  }
  s_.assign(static_cast<std::size_t>(cfg_.N), s0);
  phi_.assign(s_.size(), p_.eval(s0));
  total_ = 0.0;
  for (double v : phi_) total_ += v;
  if (total_ > budget_) throw NumericalError("start configuration violates the ball constraint");
  buf_.reserve(p_.piece_count());
  buf_piece_.reserve(p_.piece_count());
  for (std::size_t i = 0; i < cfg_.burn_in; ++i) sweep();
  started_ = true;
}

void BallSampler::sweep() {
  const double margin = 1e-13 * std::max(1.0, budget_);
  for (std::size_t i = 0; i < s_.size(); ++i) {
    const double rest = total_ - phi_[i];
    const double b = budget_ - rest - margin;
    if (!(b >= 0.0)) continue;
    buf_.clear();
    buf_piece_.clear();
    double cum = 0.0;
    for (const auto& piece : p_.pieces()) {
      if (piece.range_lo() > b) continue;
      const auto iv = piece.sublevel_interval(b);
      if (!iv || !(iv->second > iv->first)) continue;
      cum += iv->second - iv->first;
      buf_.push_back(*iv);
      buf_piece_.push_back(&piece);
    }
    if (buf_.empty()) continue;
    double u = uniform01(rng_) * cum;
    std::size_t k = 0;
    while (k + 1 < buf_.size() && u >= buf_[k].second - buf_[k].first) {
      u -= buf_[k].second - buf_[k].first;
      ++k;
    }
    const double v = std::clamp(buf_[k].first + u, buf_[k].first, buf_[k].second);
    const double pv = buf_piece_[k]->eval(v);
    if (pv > b + margin) continue;  // inverse rounding at the sublevel edge; keep the old value
    s_[i] = v;
    phi_[i] = pv;
    total_ = rest + pv;
  }
  total_ = 0.0;
  for (double v : phi_) total_ += v;
}

void BallSampler::next(std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(cfg_.N)) throw DomainError("output span must have N entries");
  if (trivial_) {
    for (double& x : out) x = draw_coordinate();
    ++proposals_;
    ++accepted_;
    return;
  }
  if (cfg_.method == SamplerMethod::rejection_uniform) {
    rejection(out);
    return;
  }
  if (!started_) {
    start_chain();
  } else {
    for (std::size_t i = 0; i < cfg_.thin; ++i) sweep();
  }
  std::copy(s_.begin(), s_.end(), out.begin());
}

std::vector<double> BallSampler::next() {
  std::vector<double> out(static_cast<std::size_t>(cfg_.N));
  next(out);
  return out;
}

std::vector<double> sample_ball(const Potential& p, const SamplerConfig& cfg, std::mt19937_64& rng) {
  BallSampler s(p, cfg, rng);
  auto out = s.next();
  rng = s.rng();
  return out;
}

std::vector<double> SampleMatrix::column(int j) const {
  if (j < 0 || j >= N) throw DomainError("column index out of range");
  std::vector<double> out(count);
  for (std::size_t r = 0; r < count; ++r) out[r] = data[r * static_cast<std::size_t>(N) + static_cast<std::size_t>(j)];
  return out;
}

SampleMatrix draw_samples(const Potential& p, const SamplerConfig& cfg, std::size_t count, int chains) {
  if (chains < 1) throw DomainError("chains must be at least 1");
  SampleMatrix m;
  m.N = cfg.N;
  m.count = count;
  m.data.assign(count * static_cast<std::size_t>(cfg.N), 0.0);
  const auto C = static_cast<std::size_t>(chains);
  std::vector<std::size_t> start(C + 1, 0);
  for (std::size_t c = 0; c < C; ++c) start[c + 1] = start[c] + count / C + (c < count % C ? 1 : 0);
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < C; ++c) {
    try {
      BallSampler s(p, cfg, chain_rng(cfg.seed, c));
      const auto n = static_cast<std::size_t>(cfg.N);
      for (std::size_t r = start[c]; r < start[c + 1]; ++r) s.next(std::span<double>(m.data.data() + r * n, n));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return m;
}

MarginalTV empirical_marginal_tv(std::span<const double> xs, const GridDensity& predicted, std::size_t bins) {
  if (xs.size() < 10'000) throw DomainError("empirical marginal TV needs at least 1e4 samples");
  if (bins < 1) throw DomainError("bins must be at least 1");
  const double lo = predicted.y0, hi = predicted.back();
  const double w = (hi - lo) / static_cast<double>(bins);
  const GridDensity g = predicted.normalized();

  // exact integral of the piecewise linear interpolant up to x
  std::vector<double> cum(g.size(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) cum[i] = cum[i - 1] + 0.5 * g.dy * (g.values[i - 1] + g.values[i]);
  auto F = [&](double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return cum.back();
    const double u = (x - lo) / g.dy;
    const auto i = std::min(static_cast<std::size_t>(u), g.size() - 2);
    const double f = u - static_cast<double>(i);
    const double v0 = g.values[i], v1 = g.values[i + 1];
    return cum[i] + g.dy * (v0 * f + 0.5 * (v1 - v0) * f * f);
  };

  const auto counts = stats::histogram(xs, lo, hi, bins);
  double inside = 0.0;
  for (double c : counts) inside += c;
  const double n = static_cast<double>(xs.size());
  MarginalTV out{0.0, 0.0, 3.0 * std::sqrt(static_cast<double>(bins) / n), xs.size()};
  long double tv = (n - inside) / n;
  long double bias = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double a = lo + w * static_cast<double>(b), c = a + w;
    tv += std::abs(counts[b] / n - (F(c) - F(a)));
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor((a - lo) / g.dy)));
    const auto i1 = std::min(g.size() - 1, static_cast<std::size_t>(std::ceil((c - lo) / g.dy)));
    double mx = g.values[i0], mn = g.values[i0];
    for (std::size_t i = i0; i <= i1; ++i) {
      mx = std::max(mx, g.values[i]);
      mn = std::min(mn, g.values[i]);
    }
    bias += w * (mx - mn);
  }
  out.tv = static_cast<double>(tv);
  out.bias_bound = static_cast<double>(bias);
  return out;
}

double binned_tv(std::span<const double> a, std::span<const double> b, double lo, double hi, std::size_t bins) {
  const auto ca = stats::histogram(a, lo, hi, bins), cb = stats::histogram(b, lo, hi, bins);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double in_a = 0.0, in_b = 0.0;
  long double tv = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    tv += std::abs(ca[i] / na - cb[i] / nb);
    in_a += ca[i];
    in_b += cb[i];
  }
  tv += std::abs((na - in_a) / na - (nb - in_b) / nb);
  return static_cast<double>(tv);
}

void write_sample_dump(const std::filesystem::path& bin, const SampleMatrix& m, const nlohmann::json& meta) {
  std::ofstream os(bin, std::ios::binary);
  if (!os) throw DomainError("cannot write " + bin.string());
  std::vector<unsigned char> bytes(m.data.size() * 8);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    auto u = std::bit_cast<std::uint64_t>(m.data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(u >> (8 * b));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  nlohmann::json side = meta;
  side["N"] = m.N;
  side["count"] = m.count;
  std::ofstream js(std::filesystem::path(bin).replace_extension(".json"));
  js << side.dump(2) << '\n';
}

SampleMatrix read_sample_dump(const std::filesystem::path& bin) {
  std::ifstream js(std::filesystem::path(bin).replace_extension(".json"));
  if (!js) throw DomainError("missing sidecar for " + bin.string());
  const auto side = nlohmann::json::parse(js);
  SampleMatrix m;
  m.N = side.at("N").get<int>();
  m.count = side.at("count").get<std::size_t>();
  std::ifstream is(bin, std::ios::binary);
  std::vector<unsigned char> bytes(m.count * static_cast<std::size_t>(m.N) * 8);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) throw DomainError("truncated sample dump " + bin.string());
  m.data.resize(m.count * static_cast<std::size_t>(m.N));
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    m.data[i] = std::bit_cast<double>(u);
  }
  return m;
}

}  // namespace orlicz
