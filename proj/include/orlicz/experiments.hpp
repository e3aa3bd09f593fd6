#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlicz/stats.hpp"

namespace orlicz {

/// Every knob of every command. Unset optionals take per-command defaults,
/// which are written back into the output headers.
struct ExperimentConfig {
  std::optional<std::string> potential;
  std::optional<std::vector<double>> t_grid;
  std::optional<std::vector<int>> n_grid;
  std::optional<std::vector<std::string>> k;  // each "5", "sqrtN" or "thetaN:0.3"
  int grid_bits = 14;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 keeps the OpenMP default
  std::filesystem::path out = "out";
  bool timestamp = true;

  // cramer-check / truncation-check
  std::optional<std::string> base;  // exp | uniform | chi2 | tilt:<alpha> (of --potential)
  std::optional<double> y_max;
  std::optional<std::vector<double>> l_grid;

  // sample
  std::string method = "coordinate_gibbs";
  std::size_t count = 10'000;
  int chains = 1;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::size_t bins = 50;
  std::string gibbs_start = "level";  // level | minimizer

  bool literal_xi = false;
  double conv_z = 14.0;
  double clip_tol = 1e-8;

  /// Field-by-field validation; unknown keys and type mismatches are DomainErrors naming the field.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Parse errors report the line and column.
  static ExperimentConfig load(const std::filesystem::path& file);
  /// Overlay the fields set in `j` onto this config.
  void merge(const nlohmann::json& j);
};

struct DecayFit {
  double t;
  std::string model;  // "exponential" (log tv against N) or "power" (log tv against log N)
  stats::LinearFit exp_fit;
  stats::LinearFit power_fit;
  double minus_I;  // -I(t) for supercritical t, NaN otherwise
};

struct CommandResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> summary;  // one line per fit, also written as trailing CSV comments
};

CommandResult cmd_phase_sweep(const ExperimentConfig& cfg);
CommandResult cmd_tv_rate(const ExperimentConfig& cfg);
CommandResult cmd_cramer_check(const ExperimentConfig& cfg);
CommandResult cmd_truncation_check(const ExperimentConfig& cfg);
CommandResult cmd_sample(const ExperimentConfig& cfg);

/// Reads the fit trailer back out of a phase-sweep CSV.
std::vector<DecayFit> read_phase_fits(const std::filesystem::path& csv);

}  // namespace orlicz
