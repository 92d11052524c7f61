#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saltus/interval.hpp"

namespace saltus {

/// Truncated Taylor series with interval coefficients: entry k encloses
/// e^(k)(t)/k! for every t in the argument interval.
using Series = std::vector<Interval>;

namespace detail {
struct ExprNode;
}

/// Immutable expression tree for the smooth pieces of a representable
/// function. The public catalogue (poly, exp, sin, cos, sum, prod, scale,
/// affine_compose) is what function documents may contain; exp_of, recip,
/// pow_abs, signed_pow and integral are produced internally by the calculus
/// (products of exponentials, ratios, |x|^p, running integrals).
///
/// Every node supplies its value and first derivative at a point, a symbolic
/// derivative, and validated Taylor enclosures over intervals.
class Expr {
 public:
  enum class Kind {
    Poly,
    Exp,
    Sin,
    Cos,
    Sum,
    Prod,
    Scale,
    Affine,
    ExpOf,
    Recip,
    PowAbs,
    SignedPow,
    Integral,
  };

  /// The zero constant.
  Expr();

  static Expr constant(double c);
  static Expr poly(std::vector<double> coeffs);
  static Expr exp(double alpha, double beta);
  static Expr sin(double amp, double omega, double phase);
  static Expr cos(double amp, double omega, double phase);
  static Expr sum(std::vector<Expr> args);
  static Expr prod(std::vector<Expr> args);
  static Expr scale(double c, Expr arg);
  /// arg(a t + b)
  static Expr affine(double a, double b, Expr arg);
  static Expr exp_of(Expr arg);
  static Expr recip(Expr arg);
  /// |arg|^p
  static Expr pow_abs(Expr arg, double p);
  /// sign(arg) |arg|^p
  static Expr signed_pow(Expr arg, double p);
  /// t -> integral of integrand over [anchor, t]
  static Expr integral(Expr integrand, double anchor);

  Kind kind() const;

  double operator()(double t) const;
  double derivative_at(double t) const;

  /// Enclosure of the range over t.
  Interval enclose(Interval t) const;
  /// Taylor coefficients 0..order over t (coefficient k ~ e^(k)/k!).
  Series taylor(Interval t, int order) const;

  Expr derivative() const;
  /// Antiderivative built from catalogue nodes when one exists in closed
  /// form; nullopt otherwise (products of non-polynomials, internal nodes).
  std::optional<Expr> antiderivative() const;
  /// Antiderivative vanishing at `anchor`: closed form if available, else an
  /// integral node.
  Expr primitive(double anchor) const;
  /// t -> e(t + h) - e(t), rewritten in closed form for catalogue nodes so
  /// that small h does not cost cancellation.
  Expr difference(double h) const;

  bool is_constant() const;
  /// Meaningful only when is_constant().
  double constant_value() const;
  bool is_zero() const { return is_constant() && constant_value() == 0.0; }
  /// True when the tree uses only document-catalogue nodes.
  bool is_catalogue() const;
  std::size_t node_count() const;

  nlohmann::json to_json() const;
  /// Parses a catalogue node; throws DocumentError(Schema) with a JSON
  /// pointer below `pointer` on malformed input.
  static Expr from_json(const nlohmann::json& j, const std::string& pointer);

  const detail::ExprNode& node() const { return *node_; }

  friend Expr operator+(const Expr& x, const Expr& y);
  friend Expr operator-(const Expr& x, const Expr& y);
  friend Expr operator*(const Expr& x, const Expr& y);
  friend Expr operator+(const Expr& x, double c);
  friend Expr operator*(double c, const Expr& x);

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> node) : node_(std::move(node)) {}
  friend struct detail::ExprNode;
  template <typename N, typename... A>
  friend Expr make_node(A&&... args);

  std::shared_ptr<const detail::ExprNode> node_;
};

// Series arithmetic shared by the node implementations and tests.
Series series_variable(Interval t, int order);
Series series_add(const Series& x, const Series& y);
Series series_mul(const Series& x, const Series& y);
Series series_scale(double c, const Series& x);

}  // namespace saltus
