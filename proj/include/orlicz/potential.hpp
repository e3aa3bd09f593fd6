#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace orlicz {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Expression grammar for a single monotone branch.

/// c*|s|^p + d
struct PowerExpr {
  double c = 1.0;
  double p = 1.0;
  double d = 0.0;
};

/// c*exp(b*s)
struct ExpExpr {
  double c = 1.0;
  double b = 1.0;
};

/// a*s + b
struct AffineExpr {
  double a = 1.0;
  double b = 0.0;
};

using PieceExpr = std::variant<PowerExpr, ExpExpr, AffineExpr>;

enum class Direction { increasing, decreasing };

using Interval = std::pair<double, double>;

/// One strictly monotone C^1 branch of a potential on a closed interval
/// (endpoints may be infinite). phi^{-1} is single valued on each piece.
class MonotonePiece {
 public:
  MonotonePiece(double lo, double hi, PieceExpr expr);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double length() const { return hi_ - lo_; }
  Direction direction() const { return direction_; }
  const PieceExpr& expr() const { return expr_; }

  /// Infimum and supremum of phi over the piece (limits at infinite ends).
  double range_lo() const { return range_lo_; }
  double range_hi() const { return range_hi_; }

  bool contains(double s) const { return s >= lo_ && s <= hi_; }

  double eval(double s) const;
  /// One-sided at piece boundaries.
  double deriv(double s) const;

  /// The unique root of phi(s) = y on this piece, if y lies in the closed range.
  std::optional<double> inverse(double y) const;
  /// Bracketing bisection for the same root; reference path for `inverse`.
  std::optional<double> inverse_bisect(double y) const;

  /// {s in piece : phi(s) <= y}, empty when y is below the range.
  std::optional<Interval> sublevel_interval(double y) const;
  double sublevel_measure(double y) const;

  /// Integral of phi over the piece; +inf when unbounded.
  double integral() const;

 private:
  double raw_eval(double s) const;
  double end_value(double s) const;

  double lo_;
  double hi_;
  PieceExpr expr_;
  Direction direction_;
  double range_lo_;
  double range_hi_;
};

struct Thresholds {
  double t_sup;
  double t_crit;
};

/// phi: R -> [0, inf] given as a finite union of monotone pieces with
/// pairwise disjoint interiors; +inf off the union of the pieces.
class Potential {
 public:
  explicit Potential(std::vector<MonotonePiece> pieces);

  static Potential power(double p);
  static Potential simplex();
  static Potential abs_bounded(double a);
  /// First m intervals [k, k + 2^-k) of the disconnected example, shifted by
  /// one so the infimum is zero.
  static Potential pathological(int m);

  double eval(double s) const;
  double deriv(double s) const;

  /// All s with phi(s) = y, ascending; at most one per piece.
  std::vector<double> preimage(double y) const;

  std::span<const MonotonePiece> pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }

  double domain_measure() const { return domain_measure_; }
  bool bounded_domain() const { return domain_measure_ < kInf; }
  double t_sup() const { return t_sup_; }
  double t_crit() const { return t_crit_; }
  Thresholds thresholds() const { return {t_sup_, t_crit_}; }

  /// Lebesgue measure of phi^{-1}([0, y]).
  double sublevel_measure(double y) const;
  /// phi^{-1}([0, y]) as disjoint intervals, one per contributing piece.
  std::vector<Interval> sublevel_set(double y) const;
  /// Points where phi attains zero.
  std::vector<double> minimizers() const;

  /// phi_L = phi on {phi <= L}, +inf elsewhere.
  Potential truncated(double L) const;

  nlohmann::json to_json() const;
  static Potential from_json(const nlohmann::json& j);
  /// `builtin:name[,params]`, a JSON file path, or inline JSON.
  static Potential parse(const std::string& spec);

  const std::string& name() const { return name_; }

 private:
  void finish();

  std::vector<MonotonePiece> pieces_;
  nlohmann::json description_;
  std::string name_ = "pieces";
  double domain_measure_ = 0.0;
  double t_sup_ = 0.0;
  double t_crit_ = 0.0;
};

nlohmann::json expr_to_json(const PieceExpr& e);
PieceExpr expr_from_json(const nlohmann::json& j);

}  // namespace orlicz
