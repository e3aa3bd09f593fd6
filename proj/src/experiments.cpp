#include "orlicz/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include "orlicz/ball_sampler.hpp"
#include "orlicz/cramer.hpp"
#include "orlicz/errors.hpp"
#include "orlicz/marginal_tv.hpp"
#include "orlicz/pushforward.hpp"
#include "orlicz/svg.hpp"
#include "orlicz/tilt.hpp"
#include "orlicz/truncation.hpp"

namespace orlicz {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_field(const std::string& key, const std::string& want) {
  throw DomainError("config field '" + key + "': expected " + want);
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) bad_field(key, "a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& key, long long lo) {
  if (!v.is_number_integer() || v.get<long long>() < lo) bad_field(key, "an integer >= " + std::to_string(lo));
  return v.get<long long>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad_field(key, "a string");
  return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& key) {
  if (!v.is_array()) bad_field(key, "an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_number(x, key));
  return out;
}

std::string k_text(const json& x, const std::string& key) {
  if (x.is_number_integer()) return std::to_string(x.get<long long>());
  return as_string(x, key);
}

// ---- shared plumbing -------------------------------------------------------

std::size_t cells(const ExperimentConfig& c) {
  if (c.grid_bits < 6 || c.grid_bits > 22) throw DomainError("grid_bits must lie in [6, 22]");
  return std::size_t{1} << c.grid_bits;
}

ConvOptions conv(const ExperimentConfig& c) {
  ConvOptions o;
  if (!(c.conv_z > 0.0)) throw DomainError("conv_z must be positive");
  if (!(c.clip_tol > 0.0)) throw DomainError("clip_tol must be positive");
  o.z = c.conv_z;
  o.clip_tol = c.clip_tol;
  return o;
}

json conv_json(const ConvOptions& o) {
  return {{"z", o.z}, {"max_log2", o.max_log2}, {"clip_tol", o.clip_tol}};
}

std::vector<double> t_ladder(const ExperimentConfig& c, std::vector<double> def) {
  auto ts = c.t_grid.value_or(std::move(def));
  if (ts.empty()) throw DomainError("empty t-ladder");
  for (double t : ts)
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("t-ladder values must be positive and finite");
  return ts;
}

std::vector<int> n_ladder(const ExperimentConfig& c, std::vector<int> def) {
  auto ns = c.n_grid.value_or(std::move(def));
  if (ns.empty()) throw DomainError("empty N-ladder");
  for (int n : ns)
    if (n < 1) throw DomainError("N-ladder values must be at least 1");
  return ns;
}

std::vector<KSpec> k_ladder(const ExperimentConfig& c, std::vector<std::string> def) {
  const auto ks = c.k.value_or(std::move(def));
  if (ks.empty()) throw DomainError("empty k list");
  std::vector<KSpec> out;
  for (const auto& s : ks) out.push_back(KSpec::parse(s));
  return out;
}

/// Runs f(i) for i < n on the OpenMP pool and rethrows the first failure in index order.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  std::vector<std::exception_ptr> err(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
      err[i] = std::current_exception();
    }
  }
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
}

std::vector<std::string> provenance(const std::string& command, const json& resolved) {
  std::vector<std::string> out{"command: " + command};
  for (const auto& [key, v] : resolved.items()) out.push_back(key + ": " + v.dump());
  return out;
}

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string g6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

/// Files are only created once every row has been computed.
struct Outputs {
  const ExperimentConfig& cfg;
  CommandResult result;

  void text(const std::string& name, const std::string& body) {
    fs::create_directories(cfg.out);
    const fs::path p = cfg.out / name;
    std::ofstream os(p, std::ios::binary);
    os << body;
    if (!os) throw DomainError("cannot write " + p.string());
    result.files.push_back(p);
  }
  void plot(const std::string& name, const svg::Plot& pl) {
    std::ostringstream os;
    svg::write(os, pl, cfg.timestamp ? std::optional<std::string>(svg::utc_timestamp()) : std::nullopt);
    text(name, os.str());
  }
};

std::optional<stats::LinearFit> fit_logs(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) xs.push_back(x[i]), ys.push_back(y[i]);
  }
  if (xs.size() < 2) return std::nullopt;
  return stats::linear_fit(xs, ys);
}

std::string fit_text(const std::string& prefix, const std::optional<stats::LinearFit>& f) {
  return prefix + "slope=" + (f ? g6(f->slope) : "nan") + " " + prefix + "r2=" + (f ? g6(f->r2) : "nan");
}

// ---- base densities for the one-dimensional checks ------------------------

struct Base {
  GridDensity density;
  json desc;
};

Base make_base(const ExperimentConfig& c) {
  const std::string name = c.base.value_or("exp");
  std::optional<Potential> pot;
  double alpha = 0.0, y_max = 64.0;
  if (name == "exp") {
    pot = Potential::simplex(), alpha = -1.0;
  } else if (name == "uniform") {
    pot = Potential::abs_bounded(1.0), y_max = 1.0;
  } else if (name == "chi2") {
    pot = Potential::power(2.0), alpha = -0.5, y_max = 96.0;
  } else if (name.rfind("tilt:", 0) == 0) {
    try {
      alpha = std::stod(name.substr(5));
    } catch (const std::exception&) {
      throw DomainError("bad base '" + name + "'");
    }
    if (!c.potential) throw DomainError("base '" + name + "' needs --potential");
    pot = Potential::parse(*c.potential);
    if (pot->t_sup() < kInf) y_max = pot->t_sup();
  } else {
    throw DomainError("unknown base '" + name + "' (exp, uniform, chi2, tilt:<alpha>)");
  }
  if (c.y_max) {
    if (!(*c.y_max > 0.0)) throw DomainError("y_max must be positive");
    y_max = *c.y_max;
  }
  const auto n = cells(c);
  Base b{tilt_density(build_psi(*pot, y_max, n), alpha).normalized(), {}};
  b.desc = {{"name", name}, {"potential", pot->to_json()}, {"alpha", alpha}, {"y_max", y_max}, {"cells", n}};
  return b;
}

const Potential& checked_levels(const Potential& p, const std::vector<double>& ts) {
  for (double t : ts) {
    if (!(t < p.t_sup()))
      throw DomainError("t = " + g6(t) + " is not below t_sup = " + g6(p.t_sup()) + "; the ball is the whole cube");
  }
  return p;
}

}  // namespace

// ---- config ----------------------------------------------------------------

void ExperimentConfig::merge(const json& j) {
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "potential") {
      potential = v.is_object() ? v.dump() : as_string(v, key);
    } else if (key == "t_grid") {
      t_grid = as_numbers(v, key);
    } else if (key == "n_grid") {
      if (!v.is_array()) bad_field(key, "an array of integers");
      std::vector<int> ns;
      for (const auto& x : v) ns.push_back(static_cast<int>(as_integer(x, key, 1)));
      n_grid = ns;
    } else if (key == "k") {
      std::vector<std::string> ks;
      if (v.is_array()) {
        for (const auto& x : v) ks.push_back(k_text(x, key));
      } else {
        ks.push_back(k_text(v, key));
      }
      k = ks;
    } else if (key == "grid_bits") {
      grid_bits = static_cast<int>(as_integer(v, key, 1));
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) bad_field(key, "a non-negative integer");
      seed = v.get<std::uint64_t>();
    } else if (key == "jobs") {
      jobs = static_cast<int>(as_integer(v, key, 0));
    } else if (key == "out") {
      out = as_string(v, key);
    } else if (key == "timestamp") {
      if (!v.is_boolean()) bad_field(key, "a boolean");
      timestamp = v.get<bool>();
    } else if (key == "base") {
      base = as_string(v, key);
    } else if (key == "y_max") {
      y_max = as_number(v, key);
    } else if (key == "l_grid") {
      l_grid = as_numbers(v, key);
    } else if (key == "method") {
      method = as_string(v, key);
    } else if (key == "count") {
      count = static_cast<std::size_t>(as_integer(v, key, 1));
    } else if (key == "chains") {
      chains = static_cast<int>(as_integer(v, key, 1));
    } else if (key == "burn_in") {
      burn_in = static_cast<std::size_t>(as_integer(v, key, 0));
    } else if (key == "thin") {
      thin = static_cast<std::size_t>(as_integer(v, key, 1));
    } else if (key == "bins") {
      bins = static_cast<std::size_t>(as_integer(v, key, 2));
    } else if (key == "gibbs_start") {
      gibbs_start = as_string(v, key);
      if (gibbs_start != "level" && gibbs_start != "minimizer") bad_field(key, "\"level\" or \"minimizer\"");
    } else if (key == "literal_xi") {
      if (!v.is_boolean()) bad_field(key, "a boolean");
      literal_xi = v.get<bool>();
    } else if (key == "conv_z") {
      conv_z = as_number(v, key);
    } else if (key == "clip_tol") {
      clip_tol = as_number(v, key);
    } else {
      throw DomainError("config: unknown field '" + key + "'");
    }
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.merge(j);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DomainError("cannot open config " + file.string());
  const std::string text{std::istreambuf_iterator<char>(in), {}};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line, col = 1;
      else ++col;
    }
    throw DomainError(file.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const DomainError& e) {
    throw DomainError(file.string() + ": " + e.what());
  }
}

// ---- phase-sweep -------------------------------------------------------------

CommandResult cmd_phase_sweep(const ExperimentConfig& cfg) {
  const std::string pspec = cfg.potential.value_or("builtin:abs,1");
  const Potential pot = Potential::parse(pspec);
  const auto ts = t_ladder(cfg, {0.3, 0.4, 0.5, 0.6, 0.75});
  const auto Ns = n_ladder(cfg, {100, 200, 500, 1000, 2000});
  const auto ks = k_ladder(cfg, {"1"});
  if (ks.size() != 1) throw DomainError("phase-sweep takes a single k");
  checked_levels(pot, ts);
  const auto n = cells(cfg);
  TVOptions opt;
  opt.rule = ks[0].rule;
  opt.literal_xi = cfg.literal_xi;
  opt.conv = conv(cfg);
  for (int N : Ns) ks[0].k_for(N);

  std::vector<std::optional<TiltFamily>> fam(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) { fam[i].emplace(TiltFamily::for_level(pot, ts[i], n)); });
  std::vector<TVReport> rows(ts.size() * Ns.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    const std::size_t ti = i / Ns.size(), ni = i % Ns.size();
    rows[i] = tv_report(*fam[ti], Ns[ni], ks[0].k_for(Ns[ni]), ts[ti], opt);
  });

  std::vector<std::string> trailer;
  svg::Plot pl{"log TV against N, " + pot.name() + ", k = " + ks[0].str(), "N", "log tv_exact", false, {}, {}};
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    std::vector<double> x, lx, y;
    for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
      x.push_back(Ns[ni]);
      lx.push_back(std::log(static_cast<double>(Ns[ni])));
      y.push_back(rows[ti * Ns.size() + ni].log_tv_exact);
    }
    const Regime reg = rows[ti * Ns.size()].regime;
    const auto ef = fit_logs(x, y), pf = fit_logs(lx, y);
    const double mi = reg == Regime::supercritical ? -fam[ti]->rate_function(ts[ti]).I : kNaN;
    std::string model = "none";
    if (ef && pf) model = ef->r2 > pf->r2 ? "exponential" : "power";
    trailer.push_back("fit t=" + shortest(ts[ti]) + " regime=" + to_string(reg) + " model=" + model +
                      " " + fit_text("exp_", ef) + " " + fit_text("power_", pf) + " minus_I=" + g6(mi));
    std::string label = "t=" + g6(ts[ti]) + " " + to_string(reg);
    if (reg == Regime::supercritical && ef) label += ": slope " + g6(ef->slope) + " per N (-I " + g6(mi) + ")";
    if (reg != Regime::supercritical && pf) label += ": slope " + g6(pf->slope) + " in log N";
    pl.series.push_back({label, x, y});
  }
  pl.notes.push_back("t_crit = " + g6(pot.t_crit()) + ", t_sup = " + g6(pot.t_sup()));

  json resolved = {{"potential", pot.to_json()},
                   {"t_grid", ts},
                   {"n_grid", Ns},
                   {"k", ks[0].str()},
                   {"grid_bits", cfg.grid_bits},
                   {"grid_cells", n},
                   {"conv", conv_json(opt.conv)},
                   {"literal_xi", opt.literal_xi},
                   {"t_crit", pot.t_crit()},
                   {"t_sup", pot.t_sup()}};
  std::ostringstream csv;
  for (const auto& c : provenance("phase-sweep", resolved)) csv << "# " << c << '\n';
  csv << "N,k,t,regime,tv_exact,log_tv_exact,tv_predicted,ratio,xi_used,alpha\n" << std::setprecision(17);
  for (const auto& r : rows) {
    csv << r.N << ',' << r.k << ',' << shortest(r.t) << ',' << to_string(r.regime) << ',' << r.tv_exact << ',' << r.log_tv_exact
        << ',' << r.tv_predicted << ',' << r.ratio << ',' << r.xi_used << ',' << r.alpha << '\n';
  }
  for (const auto& c : trailer) csv << "# " << c << '\n';

  Outputs out{cfg, {}};
  out.text("phase_sweep.csv", csv.str());
  out.plot("phase_sweep.svg", pl);
  out.result.summary = trailer;
  return out.result;
}

std::vector<DecayFit> read_phase_fits(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DomainError("cannot open " + csv.string());
  std::vector<DecayFit> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# fit ", 0) != 0) continue;
    std::istringstream ss(line.substr(6));
    std::string item;
    DecayFit f{};
    while (ss >> item) {
      const auto eq = item.find('=');
      const std::string key = item.substr(0, eq), v = item.substr(eq + 1);
      const double d = v == "nan" ? kNaN : (key == "model" || key == "regime") ? 0.0 : std::stod(v);
      if (key == "t") f.t = d;
      else if (key == "model") f.model = v;
      else if (key == "exp_slope") f.exp_fit.slope = d;
      else if (key == "exp_r2") f.exp_fit.r2 = d;
      else if (key == "power_slope") f.power_fit.slope = d;
      else if (key == "power_r2") f.power_fit.r2 = d;
      else if (key == "minus_I") f.minus_I = d;
    }
    out.push_back(f);
  }
  return out;
}

// ---- tv-rate -------------------------------------------------------------------

CommandResult cmd_tv_rate(const ExperimentConfig& cfg) {
  const Potential pot = Potential::parse(cfg.potential.value_or("builtin:simplex"));
  const auto ts = t_ladder(cfg, {1.0});
  const auto Ns = n_ladder(cfg, {200, 400, 800, 1600, 3200});
  const auto ks = k_ladder(cfg, {"1", "2", "5", "10", "sqrtN"});
  checked_levels(pot, ts);
  for (const auto& k : ks)
    for (int N : Ns) k.k_for(N);
  const auto n = cells(cfg);
  const ConvOptions co = conv(cfg);

  std::vector<std::optional<TiltFamily>> fam(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) { fam[i].emplace(TiltFamily::for_level(pot, ts[i], n)); });
  const std::size_t per_t = ks.size() * Ns.size();
  std::vector<TVReport> rows(ts.size() * per_t);
  parallel_for(rows.size(), [&](std::size_t i) {
    const std::size_t ti = i / per_t, ki = (i % per_t) / Ns.size(), ni = i % Ns.size();
    TVOptions opt{ks[ki].rule, cfg.literal_xi, co};
    rows[i] = tv_report(*fam[ti], Ns[ni], ks[ki].k_for(Ns[ni]), ts[ti], opt);
  });

  const double xi = xi_limit();
  std::vector<std::string> trailer;
  svg::Plot pl{"tv_exact over prediction, " + pot.name(), "N", "ratio", true, {}, {}};
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      double cp = 0.0;
      std::vector<double> x, y;
      for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
        const auto& r = rows[ti * per_t + ki * Ns.size() + ni];
        x.push_back(r.N);
        y.push_back(r.ratio);
        if (r.regime == Regime::supercritical) {
          cp = kNaN;
        } else if (ks[ki].rule == KRule::theta) {
          cp = std::max(cp, std::abs(r.tv_exact / q_theta(ks[ki].theta) - 1.0));
        } else if (r.k < r.N) {
          const double dev = std::abs(r.tv_exact * r.N / (xi * r.k) - 1.0);
          cp = std::max(cp, dev / (1.0 / std::sqrt(r.k) + 1.0 / std::sqrt(static_cast<double>(r.N - r.k))));
        }
      }
      const std::string what = ks[ki].rule == KRule::theta ? "max_rel_dev_Q=" : "C_prime=";
      trailer.push_back("fit t=" + shortest(ts[ti]) + " k=" + ks[ki].str() + " " + what + g6(cp));
      pl.series.push_back({"t=" + g6(ts[ti]) + " k=" + ks[ki].str(), x, y});
    }
  }
  pl.notes.push_back("xi = " + g6(xi));

  json resolved = {{"potential", pot.to_json()},
                   {"t_grid", ts},
                   {"n_grid", Ns},
                   {"k", [&] {
                      std::vector<std::string> v;
                      for (const auto& k : ks) v.push_back(k.str());
                      return v;
                    }()},
                   {"grid_bits", cfg.grid_bits},
                   {"grid_cells", n},
                   {"conv", conv_json(co)},
                   {"literal_xi", cfg.literal_xi},
                   {"xi", xi},
                   {"t_crit", pot.t_crit()}};
  std::ostringstream csv;
  write_tv_csv(csv, rows, provenance("tv-rate", resolved));
  for (const auto& c : trailer) csv << "# " << c << '\n';

  Outputs out{cfg, {}};
  out.text("tv_rate.csv", csv.str());
  out.plot("tv_rate.svg", pl);
  out.result.summary = trailer;
  return out.result;
}

// ---- cramer-check -------------------------------------------------------------

CommandResult cmd_cramer_check(const ExperimentConfig& cfg) {
  const Base base = make_base(cfg);
  const auto ts = t_ladder(cfg, {1.5});
  const auto Ns = n_ladder(cfg, {50, 100, 200, 400, 800});
  const ConvOptions co = conv(cfg);
  const double mean = base.density.mean();
  for (double t : ts)
    if (!(t > mean)) throw DomainError("t = " + g6(t) + " must exceed the base mean " + g6(mean));

  std::vector<std::vector<CramerRow>> per_t(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) per_t[i] = cramer_ladder(base.density, Ns, ts[i], co);

  std::vector<CramerRow> rows;
  std::vector<std::string> trailer;
  svg::Plot pl{"Cramer residual", "N", "log |ratio - 1|", true, {}, {}};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& rs = per_t[i];
    rows.insert(rows.end(), rs.begin(), rs.end());
    std::vector<double> x, y, yc;
    double C = 0.0;
    for (const auto& r : rs) {
      x.push_back(r.N);
      y.push_back(std::log(std::abs(r.ratio - 1.0)));
      yc.push_back(std::log(std::abs(r.corrected_ratio() - 1.0)));
      C = std::max(C, std::abs(r.ratio - 1.0) * std::sqrt(static_cast<double>(r.N)));
    }
    std::vector<double> lx(x.size());
    std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log(v); });
    const auto f = fit_logs(lx, y), fc = fit_logs(lx, yc);
    trailer.push_back("fit t=" + shortest(ts[i]) + " " + fit_text("residual_", f) + " C=" + g6(C) + " alpha=" +
                      g6(rs.front().alpha) + " " + fit_text("corrected_", fc));
    pl.series.push_back({"t=" + g6(ts[i]) + " ratio", x, y});
    pl.series.push_back({"t=" + g6(ts[i]) + " ratio x alpha", x, yc});
    if (f) pl.notes.push_back("t=" + g6(ts[i]) + ": slope " + g6(f->slope) + ", corrected " + (fc ? g6(fc->slope) : "nan"));
  }

  json resolved = {{"base", base.desc},          {"t_grid", ts},
                   {"n_grid", Ns},               {"grid_bits", cfg.grid_bits},
                   {"conv", conv_json(co)},      {"base_mean", mean},
                   {"underflow_log", std::log(1e-300)}};
  std::ostringstream csv;
  write_cramer_csv(csv, rows, provenance("cramer-check", resolved), trailer);

  Outputs out{cfg, {}};
  out.text("cramer.csv", csv.str());
  out.plot("cramer.svg", pl);
  out.result.summary = trailer;
  return out.result;
}

// ---- truncation-check ---------------------------------------------------------

CommandResult cmd_truncation_check(const ExperimentConfig& cfg) {
  const Base base = make_base(cfg);
  const auto Ls = cfg.l_grid.value_or(std::vector<double>{6, 8, 10, 12, 14});
  if (Ls.empty()) throw DomainError("empty L-ladder");
  const auto rows = truncation_ladder(base.density, Ls);
  const TailFit tail = fit_tail(base.density);

  std::vector<double> x, la, lt, lg;
  for (const auto& r : rows) {
    x.push_back(r.L);
    la.push_back(std::log(r.alpha_L));
    lt.push_back(std::log(r.tv));
    lg.push_back(std::log(r.moment2_gap));
  }
  const std::vector<std::string> trailer = {"fit log_alpha " + fit_text("", fit_logs(x, la)),
                                            "fit log_tv " + fit_text("", fit_logs(x, lt)),
                                            "fit log_moment2_gap " + fit_text("", fit_logs(x, lg))};
  svg::Plot pl{"tilted truncation against L", "L", "log", false,
               {{"log alpha_L", x, la}, {"log tv", x, lt}, {"log moment2 gap", x, lg}},
               {trailer[0].substr(4), trailer[1].substr(4), trailer[2].substr(4)}};

  json resolved = {{"base", base.desc},
                   {"l_grid", Ls},
                   {"grid_bits", cfg.grid_bits},
                   {"tail_fit", {{"C", tail.C}, {"c", tail.c}, {"r2", tail.r2}, {"ok", tail.ok}}},
                   {"tail_fit_window", "last 10% of positive nodes, at least 10"},
                   {"base_mean", base.density.mean()}};
  std::ostringstream csv;
  write_ladder_csv(csv, rows, provenance("truncation-check", resolved));
  for (const auto& c : trailer) csv << "# " << c << '\n';

  Outputs out{cfg, {}};
  out.text("truncation.csv", csv.str());
  out.plot("truncation.svg", pl);
  out.result.summary = trailer;
  return out.result;
}

// ---- sample -------------------------------------------------------------------

CommandResult cmd_sample(const ExperimentConfig& cfg) {
  const Potential pot = Potential::parse(cfg.potential.value_or("builtin:abs,1"));
  const auto ts = t_ladder(cfg, {0.4});
  const auto Ns = n_ladder(cfg, {3});
  if (ts.size() != 1 || Ns.size() != 1) throw DomainError("sample takes a single t and a single N");
  SamplerConfig sc;
  sc.method = parse_sampler_method(cfg.method);
  sc.N = Ns[0];
  sc.t = ts[0];
  sc.burn_in = cfg.burn_in;
  sc.thin = cfg.thin;
  sc.seed = cfg.seed;
  sc.start = cfg.gibbs_start == "minimizer" ? GibbsStart::minimizer : GibbsStart::level;
  if (cfg.bins < 2) throw DomainError("bins must be at least 2");
  BallSampler probe(pot, sc);  // validates before any work
  const auto m = draw_samples(pot, sc, cfg.count, cfg.chains);

  // limiting coordinate law: tilt alpha_t below t_crit, the uniform law on D above
  double alpha = 0.0;
  std::optional<TiltFamily> tf;
  if (sc.t < pot.t_sup()) {
    tf.emplace(TiltFamily::for_level(pot, sc.t, cells(cfg)));
    if (sc.t < pot.t_crit()) alpha = tf->solve_alpha(sc.t);
  } else {
    tf.emplace(TiltFamily::for_level(pot, 0.5 * pot.t_sup(), cells(cfg)));
  }
  const GridDensity g = tf->gibbs_coordinate_density(alpha);
  const auto col = m.column(0);
  const double lo = g.y0, hi = g.back();
  const auto hist = stats::histogram(col, lo, hi, cfg.bins);
  const double w = (hi - lo) / static_cast<double>(cfg.bins);

  std::vector<std::string> trailer;
  if (cfg.count >= 10'000) {
    const auto mt = empirical_marginal_tv(col, g, cfg.bins);
    trailer.push_back("marginal_tv=" + g6(mt.tv) + " envelope=" + g6(mt.envelope) + " bias_bound=" + g6(mt.bias_bound));
  } else {
    trailer.push_back("marginal_tv skipped: fewer than 10000 draws");
  }

  json resolved = {{"potential", pot.to_json()}, {"N", sc.N},          {"t", sc.t},
                   {"method", to_string(sc.method)}, {"seed", sc.seed}, {"count", cfg.count},
                   {"chains", cfg.chains},         {"burn_in", sc.burn_in == 0 ? 10 * static_cast<std::size_t>(sc.N) : sc.burn_in},
                   {"thin", sc.thin},              {"bins", cfg.bins},  {"grid_bits", cfg.grid_bits},
                   {"predicted_alpha", alpha},      {"gibbs_start", cfg.gibbs_start}};
  std::ostringstream csv;
  for (const auto& c : provenance("sample", resolved)) csv << "# " << c << '\n';
  csv << "x,empirical_density,predicted_density\n" << std::setprecision(17);
  svg::Plot pl{"first coordinate, " + pot.name() + ", N = " + std::to_string(sc.N), "s_1", "density", false, {}, {}};
  std::vector<double> xs, ye, yp;
  for (std::size_t b = 0; b < cfg.bins; ++b) {
    const double x = lo + (static_cast<double>(b) + 0.5) * w;
    const double e = hist[b] / (static_cast<double>(m.count) * w);
    const double p = g.at(x) / g.mass();
    csv << x << ',' << e << ',' << p << '\n';
    xs.push_back(x), ye.push_back(e), yp.push_back(p);
  }
  for (const auto& c : trailer) csv << "# " << c << '\n';
  pl.series = {{"empirical", xs, ye}, {"limit law", xs, yp}};
  pl.notes = trailer;

  const json meta = {{"t", sc.t},
                     {"potential", pot.to_json()},
                     {"method", to_string(sc.method)},
                     {"seed", sc.seed},
                     {"chains", cfg.chains},
                     {"burn_in", resolved["burn_in"]},
                     {"thin", sc.thin},
                     {"gibbs_start", cfg.gibbs_start}};
  Outputs out{cfg, {}};
  fs::create_directories(cfg.out);
  write_sample_dump(cfg.out / "samples.bin", m, meta);
  out.result.files.push_back(cfg.out / "samples.bin");
  out.result.files.push_back(cfg.out / "samples.json");
  out.text("marginal.csv", csv.str());
  out.plot("marginal.svg", pl);
  out.result.summary = trailer;
  return out.result;
}

}  // namespace orlicz
