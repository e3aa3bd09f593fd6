#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "orlicz/errors.hpp"
#include "orlicz/experiments.hpp"
#include "orlicz/svg.hpp"

using namespace orlicz;
using nlohmann::json;

TEST_CASE("config: fields, overrides, diagnostics") {
  auto c = ExperimentConfig::from_json(json::parse(R"({"t_grid": [0.3, 0.6], "n_grid": [10, 20], "k": 5, "seed": 9})"));
  CHECK(c.t_grid->size() == 2);
  CHECK((*c.k)[0] == "5");
  CHECK(c.seed == 9);
  CHECK(c.grid_bits == 14);
  c.merge(json::parse(R"({"k": ["sqrtN", "thetaN:0.3"], "grid_bits": 10, "timestamp": false})"));
  CHECK(c.k->size() == 2);
  CHECK(c.grid_bits == 10);
  CHECK_FALSE(c.timestamp);
  CHECK(c.t_grid->at(1) == 0.6);

  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json::parse(R"({"tgrid": [1]})")), doctest::Contains("'tgrid'"), DomainError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json::parse(R"({"n_grid": [0]})")), doctest::Contains("'n_grid'"), DomainError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json::parse(R"({"t_grid": "0.3"})")), doctest::Contains("'t_grid'"), DomainError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse("[1]")), DomainError);

  const auto p = std::filesystem::temp_directory_path() / "orlicz_bad_config.json";
  std::ofstream(p) << "{\n  \"seed\": 1,\n  \"k\": ]\n}\n";
  CHECK_THROWS_WITH_AS(ExperimentConfig::load(p), doctest::Contains(":3:"), DomainError);
  std::filesystem::remove(p);
}

TEST_CASE("commands refuse empty ladders before writing") {
  ExperimentConfig c;
  c.out = std::filesystem::temp_directory_path() / "orlicz_empty_ladder";
  std::filesystem::remove_all(c.out);
  c.t_grid = std::vector<double>{};
  CHECK_THROWS_WITH_AS(cmd_phase_sweep(c), "empty t-ladder", DomainError);
  CHECK_THROWS_AS(cmd_tv_rate(c), DomainError);
  c.t_grid = std::vector<double>{0.3, 1.2};
  CHECK_THROWS_AS(cmd_phase_sweep(c), DomainError);  // 1.2 is beyond t_sup
  CHECK_FALSE(std::filesystem::exists(c.out));
}

TEST_CASE("phase sweep fits survive the CSV round trip") {
  ExperimentConfig c;
  c.out = std::filesystem::temp_directory_path() / "orlicz_phase_small";
  c.t_grid = std::vector<double>{0.3, 0.75};
  c.n_grid = std::vector<int>{50, 100, 200};
  c.grid_bits = 11;
  c.timestamp = false;
  const auto r = cmd_phase_sweep(c);
  REQUIRE(r.files.size() == 2);
  const auto fits = read_phase_fits(c.out / "phase_sweep.csv");
  REQUIRE(fits.size() == 2);
  CHECK(fits[0].t == 0.3);
  CHECK(fits[0].model == "power");
  CHECK(std::isnan(fits[0].minus_I));
  CHECK(fits[1].model == "exponential");
  CHECK(fits[1].exp_fit.slope == doctest::Approx(fits[1].minus_I).epsilon(0.05));
  std::filesystem::remove_all(c.out);
}

TEST_CASE("svg writer") {
  svg::Plot pl{"a < b", "x", "y", false, {{"one", {1, 2, 3}, {1, NAN, 3}}, {"two", {1, 2}, {0, 1}}}, {"note"}};
  std::ostringstream a, b, c;
  svg::write(a, pl);
  svg::write(b, pl);
  svg::write(c, pl, "2026-01-01T00:00:00Z");
  CHECK(a.str() == b.str());
  CHECK(a.str().find("<!--") == std::string::npos);
  CHECK(c.str().find("<!-- generated 2026-01-01T00:00:00Z -->") != std::string::npos);
  CHECK(a.str().find("a &lt; b") != std::string::npos);
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = a.str().find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  CHECK(lines == 2);
  CHECK(a.str().find("nan") == std::string::npos);
  CHECK(svg::utc_timestamp().size() == 20);
}
