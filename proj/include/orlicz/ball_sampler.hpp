#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlicz/grid.hpp"
#include "orlicz/potential.hpp"

namespace orlicz {

enum class SamplerMethod { rejection_uniform, coordinate_gibbs };
std::string to_string(SamplerMethod m);
SamplerMethod parse_sampler_method(const std::string& s);

/// Gibbs start: every coordinate just below level t, or every coordinate at a
/// minimizer of phi. From the minimizer start the first sweep hands nearly
/// the whole budget to a few coordinates and those clumps take far more than
/// 10 N sweeps to dissolve.
enum class GibbsStart { level, minimizer };

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::rejection_uniform;
  int N = 1;
  double t = 0.0;
  std::size_t burn_in = 0;  // sweeps; 0 selects 10 N
  std::size_t thin = 1;     // sweeps between emitted draws
  std::uint64_t seed = 0;
  GibbsStart start = GibbsStart::level;
};

/// Uniform draws from {s : sum phi(s_i) <= tN}. Rejection from the uniform law
/// on D^N is exact; the Gibbs scan resamples each coordinate uniformly on
/// the sublevel set left by the others.
class BallSampler {
 public:
  BallSampler(const Potential& p, const SamplerConfig& cfg);
  BallSampler(const Potential& p, const SamplerConfig& cfg, std::mt19937_64 rng);

  void next(std::span<double> out);
  std::vector<double> next();

  std::uint64_t proposals() const { return proposals_; }
  std::uint64_t accepted() const { return accepted_; }
  const SamplerConfig& config() const { return cfg_; }
  const std::mt19937_64& rng() const { return rng_; }

 private:
  double draw_coordinate();
  void rejection(std::span<double> out);
  void sweep();
  void start_chain();

  Potential p_;
  SamplerConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<double> lengths_cum_;  // cumulative piece lengths for proposals on D
  bool trivial_ = false;             // t >= t_sup: the ball is all of D^N
  double budget_ = 0.0;
  std::uint64_t proposals_ = 0, accepted_ = 0;

  bool started_ = false;
  std::vector<double> s_, phi_;
  std::vector<std::pair<double, double>> buf_;
  std::vector<const MonotonePiece*> buf_piece_;
  double total_ = 0.0;
};

std::vector<double> sample_ball(const Potential& p, const SamplerConfig& cfg, std::mt19937_64& rng);

/// count x N draws, row-major.
struct SampleMatrix {
  int N = 0;
  std::size_t count = 0;
  std::vector<double> data;
  std::vector<double> column(int j) const;
};
/// Independent chains with seeds derived from cfg.seed, run in parallel and
/// concatenated in chain order, so the result does not depend on the thread count.
SampleMatrix draw_samples(const Potential& p, const SamplerConfig& cfg, std::size_t count, int chains = 1);

struct MarginalTV {
  double tv;
  double bias_bound;  // sum over bins of width * (max - min of the predicted density)
  double envelope;    // 3 sqrt(bins / n)
  std::size_t n;
};
/// Binned TV between the empirical law of xs and a density tabulated on a grid.
MarginalTV empirical_marginal_tv(std::span<const double> xs, const GridDensity& predicted, std::size_t bins);
double binned_tv(std::span<const double> a, std::span<const double> b, double lo, double hi, std::size_t bins);

/// Little-endian doubles at `bin`, sidecar JSON next to it with extension .json.
void write_sample_dump(const std::filesystem::path& bin, const SampleMatrix& m, const nlohmann::json& meta);
SampleMatrix read_sample_dump(const std::filesystem::path& bin);

}  // namespace orlicz
