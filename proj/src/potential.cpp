#include "orlicz/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "orlicz/errors.hpp"

namespace orlicz {

namespace {

constexpr double kBracketWitness = 1e9;
constexpr int kMaxBisection = 200;
constexpr double kRootTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double json_number(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    throw DomainError("unrecognised numeric literal '" + s + "'");
  }
  return j.get<double>();
}

nlohmann::json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string piece_label(const MonotonePiece& p) {
  std::ostringstream os;
  os << "[" << p.lo() << ", " << p.hi() << "] " << expr_to_json(p.expr()).dump();
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// MonotonePiece

MonotonePiece::MonotonePiece(double lo, double hi, PieceExpr expr)
    : lo_(lo), hi_(hi), expr_(expr) {
  if (!(lo < hi) || std::isnan(lo) || std::isnan(hi)) {
    throw DomainError("piece interval must satisfy lo < hi");
  }
  bool increasing = false;
  std::visit(Overloaded{
                 [&](const PowerExpr& e) {
                   if (e.c == 0.0 || !(e.p > 0.0)) {
                     throw DomainError("power piece needs c != 0 and p > 0 (constant pieces are not allowed)");
                   }
                   if (lo < 0.0 && hi > 0.0) {
                     throw DomainError("power piece |s|^p is not monotone across 0; split it");
                   }
                   const bool positive_side = lo >= 0.0;
                   increasing = positive_side ? e.c > 0.0 : e.c < 0.0;
                 },
                 [&](const ExpExpr& e) {
                   if (e.c == 0.0 || e.b == 0.0) throw DomainError("exp piece needs c != 0 and b != 0");
                   increasing = e.c * e.b > 0.0;
                 },
                 [&](const AffineExpr& e) {
                   if (e.a == 0.0) throw DomainError("affine piece needs a != 0");
                   increasing = e.a > 0.0;
                 }},
             expr_);
  direction_ = increasing ? Direction::increasing : Direction::decreasing;
  const double at_lo = end_value(lo_);
  const double at_hi = end_value(hi_);
  range_lo_ = std::min(at_lo, at_hi);
  range_hi_ = std::max(at_lo, at_hi);
  if (std::isnan(range_lo_) || std::isnan(range_hi_)) throw DomainError("piece range is undefined");
  if (range_lo_ < 0.0) {
    if (range_lo_ > -1e-14) {
      range_lo_ = 0.0;
    } else {
      throw DomainError("potential must be non-negative; piece " + piece_label(*this) + " goes negative");
    }
  }
}

double MonotonePiece::raw_eval(double s) const {
  return std::visit(Overloaded{[&](const PowerExpr& e) { return e.c * std::pow(std::abs(s), e.p) + e.d; },
                               [&](const ExpExpr& e) { return e.c * std::exp(e.b * s); },
                               [&](const AffineExpr& e) { return e.a * s + e.b; }},
                    expr_);
}

double MonotonePiece::end_value(double s) const {
  if (std::isfinite(s)) return raw_eval(s);
  // limits at +-inf
  return std::visit(Overloaded{[&](const PowerExpr& e) { return e.c > 0 ? kInf : -kInf; },
                               [&](const ExpExpr& e) {
                                 const bool grows = (s > 0) == (e.b > 0);
                                 return grows ? (e.c > 0 ? kInf : -kInf) : 0.0;
                               },
                               [&](const AffineExpr& e) { return (s > 0) == (e.a > 0) ? kInf : -kInf; }},
                    expr_);
}

double MonotonePiece::eval(double s) const {
  const double v = raw_eval(s);
  return v < 0.0 ? 0.0 : v;
}

double MonotonePiece::deriv(double s) const {
  return std::visit(Overloaded{[&](const PowerExpr& e) {
                                const double side = lo_ >= 0.0 ? 1.0 : -1.0;
                                if (s == 0.0) {
                                  if (e.p == 1.0) return e.c * side;
                                  return e.p < 1.0 ? side * e.c * kInf : 0.0;
                                }
                                return e.c * e.p * std::pow(std::abs(s), e.p - 1.0) * side;
                              },
                              [&](const ExpExpr& e) { return e.c * e.b * std::exp(e.b * s); },
                              [&](const AffineExpr& e) { return e.a; }},
                    expr_);
}

std::optional<double> MonotonePiece::inverse(double y) const {
  if (!(y >= range_lo_ && y <= range_hi_)) return std::nullopt;
  double s = std::visit(Overloaded{[&](const PowerExpr& e) {
                                     const double u = std::max(0.0, (y - e.d) / e.c);
                                     const double r = std::pow(u, 1.0 / e.p);
                                     return lo_ >= 0.0 ? r : -r;
                                   },
                                   [&](const ExpExpr& e) { return std::log(y / e.c) / e.b; },
                                   [&](const AffineExpr& e) { return (y - e.b) / e.a; }},
                        expr_);
  if (std::isnan(s)) return inverse_bisect(y);
  return std::clamp(s, lo_, hi_);
}

std::optional<double> MonotonePiece::inverse_bisect(double y) const {
  if (!(y >= range_lo_ && y <= range_hi_)) return std::nullopt;
  double a = std::isfinite(lo_) ? lo_ : -kBracketWitness;
  double b = std::isfinite(hi_) ? hi_ : kBracketWitness;
  const double sign = direction_ == Direction::increasing ? 1.0 : -1.0;
  if (sign * (eval(a) - y) >= 0.0) return a;
  if (sign * (eval(b) - y) <= 0.0) return b;
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = 0.5 * (a + b);
    if (sign * (eval(mid) - y) < 0.0) {
      a = mid;
    } else {
      b = mid;
    }
    if (b - a <= kRootTol * std::max(std::abs(mid), 1e-300)) break;
  }
  return 0.5 * (a + b);
}

std::optional<Interval> MonotonePiece::sublevel_interval(double y) const {
  if (y < range_lo_) return std::nullopt;
  if (y >= range_hi_) return Interval{lo_, hi_};
  const double r = *inverse(y);
  return direction_ == Direction::increasing ? Interval{lo_, r} : Interval{r, hi_};
}

double MonotonePiece::sublevel_measure(double y) const {
  const auto iv = sublevel_interval(y);
  return iv ? iv->second - iv->first : 0.0;
}

double MonotonePiece::integral() const {
  if (!std::isfinite(lo_) || !std::isfinite(hi_)) return kInf;
  return std::visit(Overloaded{[&](const PowerExpr& e) {
                                 const double q = e.p + 1.0;
                                 const double m = std::abs(std::pow(std::abs(hi_), q) - std::pow(std::abs(lo_), q));
                                 return e.c * m / q + e.d * (hi_ - lo_);
                               },
                               [&](const ExpExpr& e) { return e.c * (std::exp(e.b * hi_) - std::exp(e.b * lo_)) / e.b; },
                               [&](const AffineExpr& e) {
                                 return 0.5 * e.a * (hi_ * hi_ - lo_ * lo_) + e.b * (hi_ - lo_);
                               }},
                    expr_);
}

// ---------------------------------------------------------------------------
// Potential

Potential::Potential(std::vector<MonotonePiece> pieces) : pieces_(std::move(pieces)) {
  description_ = {{"kind", "pieces"}};
  auto arr = nlohmann::json::array();
  for (const auto& p : pieces_) {
    arr.push_back({{"lo", number_json(p.lo())}, {"hi", number_json(p.hi())}, {"expr", expr_to_json(p.expr())}});
  }
  description_["pieces"] = arr;
  finish();
}

void Potential::finish() {
  if (pieces_.empty()) throw DomainError("a potential needs at least one piece");
  std::sort(pieces_.begin(), pieces_.end(), [](const auto& a, const auto& b) { return a.lo() < b.lo(); });
  for (std::size_t i = 1; i < pieces_.size(); ++i) {
    if (pieces_[i].lo() < pieces_[i - 1].hi()) {
      throw DomainError("pieces overlap: " + piece_label(pieces_[i - 1]) + " and " + piece_label(pieces_[i]));
    }
  }
  double measure = 0.0;
  double inf_value = kInf;
  double sup_value = 0.0;
  for (const auto& p : pieces_) {
    measure += p.length();
    inf_value = std::min(inf_value, p.range_lo());
    sup_value = std::max(sup_value, p.range_hi());
  }
  if (inf_value > 1e-12) {
    throw DomainError("essential infimum of the potential must be 0, got " + std::to_string(inf_value));
  }
  domain_measure_ = measure;
  t_sup_ = sup_value;
  if (std::isfinite(measure)) {
    double total = 0.0;
    for (const auto& p : pieces_) {
      const double v = p.integral();
      if (!std::isfinite(v)) throw NumericalError("integral of phi failed on piece " + piece_label(p));
      total += v;
    }
    t_crit_ = total / measure;
  } else {
    t_crit_ = kInf;
  }
  t_crit_ = std::min(t_crit_, t_sup_);
}

Potential Potential::power(double p) {
  if (!(p > 0.0)) throw DomainError("power potential needs p > 0");
  Potential out({MonotonePiece(-kInf, 0.0, PowerExpr{1.0, p, 0.0}), MonotonePiece(0.0, kInf, PowerExpr{1.0, p, 0.0})});
  out.description_ = {{"kind", "power"}, {"p", p}};
  out.name_ = "power";
  return out;
}

Potential Potential::simplex() {
  Potential out({MonotonePiece(0.0, kInf, AffineExpr{1.0, 0.0})});
  out.description_ = {{"kind", "simplex"}};
  out.name_ = "simplex";
  return out;
}

Potential Potential::abs_bounded(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("abs_bounded needs a finite a > 0");
  Potential out({MonotonePiece(-a, 0.0, PowerExpr{1.0, 1.0, 0.0}), MonotonePiece(0.0, a, PowerExpr{1.0, 1.0, 0.0})});
  out.description_ = {{"kind", "abs_bounded"}, {"a", a}};
  out.name_ = "abs_bounded";
  return out;
}

Potential Potential::pathological(int m) {
  if (m < 1 || m > 50) throw DomainError("pathological potential needs 1 <= m <= 50");
  std::vector<MonotonePiece> pieces;
  for (int k = 1; k <= m; ++k) {
    const double lo = k;
    pieces.emplace_back(lo, lo + std::ldexp(1.0, -k), AffineExpr{1.0, -1.0});
  }
  Potential out(std::move(pieces));
  out.description_ = {{"kind", "pathological"}, {"m", m}};
  out.name_ = "pathological";
  return out;
}

double Potential::eval(double s) const {
  for (const auto& p : pieces_) {
    if (p.contains(s)) return p.eval(s);
  }
  return kInf;
}

double Potential::deriv(double s) const {
  for (const auto& p : pieces_) {
    if (p.contains(s)) return p.deriv(s);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> Potential::preimage(double y) const {
  std::vector<double> roots;
  if (!(y >= 0.0) || !std::isfinite(y)) return roots;
  for (const auto& p : pieces_) {
    if (auto r = p.inverse(y); r && std::isfinite(*r)) roots.push_back(*r);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

double Potential::sublevel_measure(double y) const {
  double total = 0.0;
  for (const auto& p : pieces_) total += p.sublevel_measure(y);
  return total;
}

std::vector<Interval> Potential::sublevel_set(double y) const {
  std::vector<Interval> out;
  for (const auto& p : pieces_) {
    if (auto iv = p.sublevel_interval(y); iv && iv->second > iv->first) out.push_back(*iv);
  }
  return out;
}

std::vector<double> Potential::minimizers() const {
  std::vector<double> out;
  for (const auto& p : pieces_) {
    if (p.range_lo() > 1e-12) continue;
    const double s = p.direction() == Direction::increasing ? p.lo() : p.hi();
    if (std::isfinite(s)) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Potential Potential::truncated(double L) const {
  if (!(L > 0.0)) throw DomainError("truncation level must be positive");
  std::vector<MonotonePiece> pieces;
  for (const auto& p : pieces_) {
    if (auto iv = p.sublevel_interval(L); iv && iv->second > iv->first) {
      pieces.emplace_back(iv->first, iv->second, p.expr());
    }
  }
  Potential out(std::move(pieces));
  out.description_ = {{"kind", "truncated"}, {"L", L}, {"base", description_}};
  out.name_ = name_ + "_L";
  return out;
}

nlohmann::json Potential::to_json() const { return description_; }

Potential Potential::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw DomainError("potential JSON needs a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "power") return power(j.value("p", 2.0));
  if (kind == "simplex") return simplex();
  if (kind == "abs_bounded") return abs_bounded(j.value("a", 1.0));
  if (kind == "pathological") return pathological(j.value("m", 4));
  if (kind == "truncated") return from_json(j.at("base")).truncated(json_number(j.at("L")));
  if (kind == "pieces") {
    std::vector<MonotonePiece> pieces;
    for (const auto& pj : j.at("pieces")) {
      pieces.emplace_back(json_number(pj.at("lo")), json_number(pj.at("hi")), expr_from_json(pj.at("expr")));
    }
    return Potential(std::move(pieces));
  }
  throw DomainError("unknown potential kind '" + kind + "'");
}

Potential Potential::parse(const std::string& spec) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) {
    std::stringstream ss(spec.substr(prefix.size()));
    std::string name;
    std::getline(ss, name, ',');
    const std::string key = name == "power" ? "p" : name == "pathological" ? "m" : "a";
    nlohmann::json j = {{"kind", name == "abs" ? "abs_bounded" : name}};
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      const std::string k = eq == std::string::npos ? key : item.substr(0, eq);
      const std::string v = eq == std::string::npos ? item : item.substr(eq + 1);
      try {
        j[k] = std::stod(v);
      } catch (const std::exception&) {
        throw DomainError("bad parameter '" + item + "' in potential spec '" + spec + "'");
      }
    }
    if (j.contains("m")) j["m"] = static_cast<int>(j["m"].get<double>());
    return from_json(j);
  }
  if (!spec.empty() && spec.front() == '{') return from_json(nlohmann::json::parse(spec));
  std::ifstream in(spec);
  if (!in) throw DomainError("cannot open potential file '" + spec + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("potential file '" + spec + "': " + e.what());
  }
  return from_json(j);
}

nlohmann::json expr_to_json(const PieceExpr& e) {
  return std::visit(Overloaded{[](const PowerExpr& x) -> nlohmann::json {
                                 return {{"type", "power"}, {"c", x.c}, {"p", x.p}, {"d", x.d}};
                               },
                               [](const ExpExpr& x) -> nlohmann::json { return {{"type", "exp"}, {"c", x.c}, {"b", x.b}}; },
                               [](const AffineExpr& x) -> nlohmann::json {
                                 return {{"type", "affine"}, {"a", x.a}, {"b", x.b}};
                               }},
                    e);
}

PieceExpr expr_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "power") return PowerExpr{j.value("c", 1.0), j.at("p").get<double>(), j.value("d", 0.0)};
  if (type == "exp") return ExpExpr{j.value("c", 1.0), j.at("b").get<double>()};
  if (type == "affine") return AffineExpr{j.at("a").get<double>(), j.value("b", 0.0)};
  throw DomainError("unknown piece expression type '" + type + "'");
}

}  // namespace orlicz
