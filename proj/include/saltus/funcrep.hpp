#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "saltus/expr.hpp"
#include "saltus/interval.hpp"
#include "saltus/location.hpp"

namespace saltus {

/// Numerical knobs shared by every engine.
struct Options {
  double tol = 1e-9;
  double series_tol = 1e-12;
  int max_depth = 24;
};

struct JumpRecord {
  Location loc;
  double left = 0.0;   // f(t) - f(t-)
  double right = 0.0;  // f(t+) - f(t)
  double sigma() const { return left + right; }
};

struct GeometricTerm {
  double A = 0.0;
  double q = 0.0;
};

/// Countable jump set with geometric locations. Side::Left accumulates at a
/// (t_k = a + c r^k), Side::Right at b (t_k = b - c r^k), k = 0, 1, ...
/// Every location carries a right jump m_k = sum_j A_j q_j^k.
class JumpSeries {
 public:
  enum class Side { Left, Right };

  JumpSeries(Side side, double c, double r, std::vector<GeometricTerm> terms);

  Side side() const { return side_; }
  double c() const { return c_; }
  double r() const { return r_; }
  const std::vector<GeometricTerm>& terms() const { return terms_; }

  double location(long k, double a, double b) const;
  double magnitude(long k) const;
  /// Upper bound of sum_{k > n} |m_k|; n = -1 bounds the whole mass.
  double tail_bound(long n) const;
  /// Smallest n with tail_bound(n) <= tol.
  long terms_for(double tol) const;
  /// sum_{k >= k0} m_k and sum_{k < k1} m_k in closed form.
  double sum_from(long k0) const;
  double sum_below(long k1) const;

  bool same_generator(const JumpSeries& other) const;
  JumpSeries scaled(double s) const;
  JumpSeries plus(const JumpSeries& other) const;
  nlohmann::json to_json() const;

 private:
  Side side_;
  double c_;
  double r_;
  std::vector<GeometricTerm> terms_;
};

struct Override {
  Location loc;
  double value = 0.0;
};

/// f_c(t) = c0 + expr(t) on [u, v].
struct Piece {
  double u = 0.0;
  double v = 0.0;
  Expr expr;
};

struct PointInfo {
  double left_limit = 0.0;
  double right_limit = 0.0;
  double sigma_minus = 0.0;
  double sigma_plus = 0.0;
  double sigma = 0.0;
  double value = 0.0;
};

/// A function on [a, b]: continuous part (c0 plus smooth pieces), jump
/// part f_d with f_d(a) = 0, and finitely many isolated value overrides.
class RepFunc {
 public:
  struct Parts {
    double c0 = 0.0;
    std::vector<Piece> pieces;
    std::vector<JumpRecord> jumps;
    std::optional<JumpSeries> series;
    std::vector<Override> overrides;
  };

  /// Validates every invariant; violations raise DocumentError with a
  /// pointer into the equivalent function document. Adjacent pieces must
  /// agree to continuity_tol (negative disables the check).
  RepFunc(double a, double b, Parts parts, double continuity_tol = 1e-12);

  static RepFunc constant(double a, double b, double c);
  static RepFunc from_expr(double a, double b, const Expr& e);
  /// The unit function: 0 for t <= c, 1 for t > c.
  static RepFunc unit(double a, double b, const Location& c);

  double a() const { return a_; }
  double b() const { return b_; }
  double c0() const { return parts_.c0; }
  const std::vector<Piece>& pieces() const { return parts_.pieces; }
  const std::vector<JumpRecord>& jumps() const { return parts_.jumps; }
  const std::optional<JumpSeries>& series() const { return parts_.series; }
  const std::vector<Override>& overrides() const { return parts_.overrides; }
  const Parts& parts() const { return parts_; }

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;
  /// f_c(t).
  double continuous_at(double t) const;
  /// f_d(t) per the jump-sum convention, ignoring overrides.
  double discrete_at(double t) const;
  /// Value without overrides.
  double core_at(double t) const { return continuous_at(t) + discrete_at(t); }
  PointInfo limits(double t) const;
  /// Index of the piece used for f_c at t, or -1 when there are no pieces.
  int piece_index(double t) const;
  /// f_c'(t) (one-sided at piece breakpoints: the piece containing t).
  double continuous_derivative(double t) const;

  bool has_series() const { return parts_.series.has_value(); }
  bool is_continuous() const {
    return parts_.jumps.empty() && !parts_.series && parts_.overrides.empty();
  }
  /// Piece breakpoints including a and b.
  std::vector<double> breakpoints() const;
  /// Finite discontinuity points: jump records and overrides.
  std::vector<Location> special_points() const;
  const JumpRecord* jump_at(double t) const;
  const Override* override_at(double t) const;
  /// Series location index equal to t, if any.
  std::optional<long> series_index_at(double t) const;
  /// Sum of |sigma^-| + |sigma^+| over finite jumps plus the series bound.
  double jump_mass() const;

  nlohmann::json to_json() const;

 private:
  double series_part(double t, bool inclusive) const;
  void validate(double continuity_tol);

  double a_;
  double b_;
  Parts parts_;
  std::vector<double> prefix_;  // prefix_[i] = sum of sigma of jumps[0..i)
};

/// (f(t) - f(t-), f(t+) - f(t)) with the actual value f(t), so an override
/// shows up as a removable pair (d, -d). Convention: zero outside [a, b].
std::pair<double, double> side_jumps(const RepFunc& f, double t);

/// Whether f is discontinuous at t (jump record, override or series point).
bool discontinuous_at(const RepFunc& f, double t);

/// Parses a function document (see README for the schema).
RepFunc make_func(const nlohmann::json& doc);

void require_same_domain(const RepFunc& f, const RepFunc& g);

/// Continuous-part decomposition; overrides are kept with f_d.
std::pair<RepFunc, RepFunc> decompose(const RepFunc& f);

/// f = f_plus + f_minus, f_plus right-continuous built from left jumps,
/// f_minus left-continuous with all continuous content.
std::pair<RepFunc, RepFunc> rl_split(const RepFunc& f);

RepFunc add(const RepFunc& f, const RepFunc& g);
RepFunc scale(const RepFunc& f, double c);
RepFunc add_constant(const RepFunc& f, double c);
RepFunc mul(const RepFunc& f, const RepFunc& g);
RepFunc subtract(const RepFunc& f, const RepFunc& g);

/// |f| and |f|^p. Series jumps are first materialized to series_tol.
RepFunc abs(const RepFunc& f, const Options& opt = {});
RepFunc pow_abs(const RepFunc& f, double p, const Options& opt = {});

/// Replaces the series by its first terms so that the dropped tail mass is
/// at most tol. Returns the function and the dropped mass bound.
std::pair<RepFunc, double> truncate_series(const RepFunc& f, double tol);

/// Same function with overrides removed (one-sided limits unchanged).
RepFunc drop_overrides(const RepFunc& f);

/// Restriction to [c, d] within the domain; the values at c and d are kept
/// (jumps at the new endpoints become one-sided).
RepFunc restrict(const RepFunc& f, double c, double d);

/// Cell decomposition of a series-free function: cells between consecutive
/// points of `points` (sorted, including a and b) with the full expression
/// of f on each open cell.
struct Cell {
  double u = 0.0;
  double v = 0.0;
  Expr expr;
};
std::vector<Cell> cells_of(const RepFunc& f, const std::vector<double>& points);
/// Sorted union of breakpoints and finite special points of all functions.
std::vector<double> merged_points(const std::vector<const RepFunc*>& fs,
                                  const std::vector<double>& extra = {});

/// Builds a RepFunc from open-cell expressions and values at selected
/// cell boundaries. Boundaries without a value are continuity points.
RepFunc from_cells(double a, double b, const std::vector<Cell>& cells,
                   const std::vector<std::pair<Location, double>>& values);

/// Location for a point, reusing the decimal token of any discontinuity of
/// the given functions sitting there.
Location location_for(double t, const std::vector<const RepFunc*>& fs);

/// Enclosure of the range of f over [l, r] (values, one-sided limits).
Interval range(const RepFunc& f, double l, double r);
/// Upper bound of sup |f| on the domain.
double sup_abs(const RepFunc& f);

struct StepFunc {
  std::vector<double> breakpoints;
  std::vector<double> values;       // on (t_{k-1}, t_k)
  std::vector<double> node_values;  // at t_k
  double eval(double t) const;
  RepFunc to_repfunc(const std::vector<const RepFunc*>& token_sources = {}) const;
};

/// Step function with sup |f - s| <= eps.
StepFunc step_approx(const RepFunc& f, double eps);

struct RootScan {
  std::vector<double> roots;
  /// Subintervals where a sign change could be neither excluded nor located.
  std::vector<std::pair<double, double>> uncertain;
};

/// Sign changes of e on [u, v] by interval exclusion and monotone bracketing.
RootScan scan_roots(const Expr& e, double u, double v, int max_depth = 48);

/// Roots plus midpoints of the uncertain subintervals, sorted.
std::vector<double> isolate_roots(const Expr& e, double u, double v, int max_depth = 48);

}  // namespace saltus
