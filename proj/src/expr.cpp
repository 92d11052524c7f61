#include "saltus/expr.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <complex>
#include <limits>
#include <numbers>
#include <utility>

#include "saltus/errors.hpp"

namespace saltus {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Series arithmetic

Series series_variable(Interval t, int order) {
  Series s(static_cast<std::size_t>(order) + 1, Interval(0.0));
  s[0] = t;
  if (order >= 1) s[1] = 1.0;
  return s;
}

Series series_add(const Series& x, const Series& y) {
  Series r(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r[k] = x[k] + y[k];
  return r;
}

Series series_scale(double c, const Series& x) {
  Series r(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r[k] = Interval(c) * x[k];
  return r;
}

Series series_mul(const Series& x, const Series& y) {
  Series r(x.size(), Interval(0.0));
  for (std::size_t k = 0; k < x.size(); ++k) {
    Interval acc(0.0);
    for (std::size_t j = 0; j <= k; ++j) acc += x[j] * y[k - j];
    r[k] = acc;
  }
  return r;
}

namespace {

Series series_const(double c, std::size_t n) {
  Series s(n, Interval(0.0));
  s[0] = c;
  return s;
}

// y' = y x'
Series series_exp(const Series& x) {
  Series y(x.size(), Interval(0.0));
  y[0] = exp(x[0]);
  for (std::size_t k = 1; k < x.size(); ++k) {
    Interval acc(0.0);
    for (std::size_t j = 1; j <= k; ++j) acc += Interval(static_cast<double>(j)) * x[j] * y[k - j];
    y[k] = acc / Interval(static_cast<double>(k));
  }
  return y;
}

std::pair<Series, Series> series_sincos(const Series& x) {
  Series s(x.size(), Interval(0.0));
  Series c(x.size(), Interval(0.0));
  s[0] = sin(x[0]);
  c[0] = cos(x[0]);
  for (std::size_t k = 1; k < x.size(); ++k) {
    Interval as(0.0);
    Interval ac(0.0);
    for (std::size_t j = 1; j <= k; ++j) {
      const Interval jx = Interval(static_cast<double>(j)) * x[j];
      as += jx * c[k - j];
      ac += jx * s[k - j];
    }
    s[k] = as / Interval(static_cast<double>(k));
    c[k] = -(ac / Interval(static_cast<double>(k)));
  }
  return {s, c};
}

Series series_recip(const Series& x) {
  Series y(x.size(), Interval(0.0));
  y[0] = reciprocal(x[0]);
  for (std::size_t k = 1; k < x.size(); ++k) {
    Interval acc(0.0);
    for (std::size_t j = 1; j <= k; ++j) acc += x[j] * y[k - j];
    y[k] = -(y[0] * acc);
  }
  return y;
}

bool small_integer(double p, int& n) {
  if (p < 0.0 || p > 16.0 || std::floor(p) != p) return false;
  n = static_cast<int>(p);
  return true;
}

Series series_power_int(const Series& x, int n) {
  Series r = series_const(1.0, x.size());
  for (int i = 0; i < n; ++i) r = series_mul(r, x);
  return r;
}

Interval signed_pow_interval(Interval x, double p) {
  auto f = [p](double v) {
    const double m = std::pow(std::abs(v), p);
    return v < 0.0 ? -m : (v > 0.0 ? m : 0.0);
  };
  if (p < 0.0 && x.contains_zero()) return Interval::whole();
  return detail::widen(f(x.lo), f(x.hi));
}

// |x|^p or sign(x)|x|^p
Series series_pow(const Series& x, double p, bool signed_variant) {
  int n = 0;
  if (small_integer(p, n)) {
    const bool even = n % 2 == 0;
    if ((even && !signed_variant) || (!even && signed_variant)) return series_power_int(x, n);
  }
  Series y(x.size(), Interval::whole());
  if (x[0].contains_zero()) {
    y[0] = signed_variant ? signed_pow_interval(x[0], p) : pow_abs(x[0], p);
    return y;
  }
  const double s = x[0].strictly_positive() ? 1.0 : -1.0;
  const Series u = series_scale(s, x);
  y[0] = pow_abs(u[0], p);
  const Interval inv_u0 = reciprocal(u[0]);
  for (std::size_t k = 1; k < x.size(); ++k) {
    Interval acc(0.0);
    for (std::size_t j = 1; j <= k; ++j) {
      const double w = p * static_cast<double>(j) - static_cast<double>(k - j);
      acc += Interval(w) * u[j] * y[k - j];
    }
    y[k] = acc * inv_u0 / Interval(static_cast<double>(k));
  }
  if (signed_variant && s < 0.0) return series_scale(-1.0, y);
  return y;
}

// Coefficients of F(x(t)) given those of F'(x(t)) and an enclosure of F(x0).
Series series_primitive(const Series& x, const Series& fprime_at_x, Interval f0) {
  Series y(x.size(), Interval(0.0));
  y[0] = f0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    Interval acc(0.0);
    for (std::size_t j = 1; j <= k; ++j)
      acc += Interval(static_cast<double>(j)) * x[j] * fprime_at_x[k - j];
    y[k] = acc / Interval(static_cast<double>(k));
  }
  return y;
}

std::vector<double> trim(std::vector<double> c) {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  if (c.empty()) c.push_back(0.0);
  return c;
}

std::vector<double> poly_add(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> r(std::max(x.size(), y.size()), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) r[i] += x[i];
  for (std::size_t i = 0; i < y.size(); ++i) r[i] += y[i];
  return trim(std::move(r));
}

std::vector<double> poly_mul(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> r(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) r[i + j] += x[i] * y[j];
  return trim(std::move(r));
}

std::vector<double> poly_deriv(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> r(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) r[i - 1] = static_cast<double>(i) * c[i];
  return trim(std::move(r));
}

std::vector<double> poly_integrate(const std::vector<double>& c) {
  std::vector<double> r(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) r[i + 1] = c[i] / static_cast<double>(i + 1);
  return trim(std::move(r));
}

double horner(const std::vector<double>& c, double t) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * t + c[i];
  return r;
}

double require_number(const json& j, const char* key, const std::string& pointer) {
  if (!j.contains(key)) throw DocumentError(ErrorKind::Schema, pointer, std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw DocumentError(ErrorKind::Schema, pointer + "/" + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DocumentError(ErrorKind::Schema, pointer + "/" + key, "non-finite number");
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Nodes

namespace detail {

struct ExprNode {
  explicit ExprNode(Expr::Kind k) : kind(k) {}
  virtual ~ExprNode() = default;

  Expr::Kind kind;

  virtual double value(double t) const = 0;
  virtual double deriv(double t) const = 0;
  virtual Series series(const Series& x) const = 0;
  virtual Expr derivative(const Expr& self) const = 0;
  virtual std::optional<Expr> antiderivative(const Expr&) const { return std::nullopt; }
  virtual bool catalogue() const = 0;
  virtual std::size_t count() const = 0;
  virtual json to_json() const = 0;

  static Expr wrap(std::shared_ptr<const ExprNode> n) { return Expr(std::move(n)); }
};

}  // namespace detail

template <typename N, typename... A>
Expr make_node(A&&... args) {
  return detail::ExprNode::wrap(std::make_shared<const N>(std::forward<A>(args)...));
}

namespace {

using detail::ExprNode;

struct PolyNode final : ExprNode {
  explicit PolyNode(std::vector<double> c) : ExprNode(Expr::Kind::Poly), coeffs(trim(std::move(c))) {}
  std::vector<double> coeffs;

  double value(double t) const override { return horner(coeffs, t); }
  double deriv(double t) const override { return horner(poly_deriv(coeffs), t); }
  Series series(const Series& x) const override {
    Series r = series_const(0.0, x.size());
    for (std::size_t i = coeffs.size(); i-- > 0;) {
      r = series_mul(r, x);
      r[0] += Interval(coeffs[i]);
    }
    return r;
  }
  Expr derivative(const Expr&) const override { return Expr::poly(poly_deriv(coeffs)); }
  std::optional<Expr> antiderivative(const Expr&) const override {
    return Expr::poly(poly_integrate(coeffs));
  }
  bool catalogue() const override { return true; }
  std::size_t count() const override { return 1; }
  json to_json() const override { return {{"kind", "poly"}, {"coeffs", coeffs}}; }
};

struct ExpNode final : ExprNode {
  ExpNode(double a, double b) : ExprNode(Expr::Kind::Exp), alpha(a), beta(b) {}
  double alpha, beta;

  double value(double t) const override { return std::exp(alpha * t + beta); }
  double deriv(double t) const override { return alpha * value(t); }
  Series series(const Series& x) const override {
    Series arg = series_scale(alpha, x);
    arg[0] += Interval(beta);
    return series_exp(arg);
  }
  Expr derivative(const Expr& self) const override { return Expr::scale(alpha, self); }
  std::optional<Expr> antiderivative(const Expr& self) const override {
    if (alpha == 0.0) return Expr::poly({0.0, std::exp(beta)});
    return Expr::scale(1.0 / alpha, self);
  }
  bool catalogue() const override { return true; }
  std::size_t count() const override { return 1; }
  json to_json() const override { return {{"kind", "exp"}, {"alpha", alpha}, {"beta", beta}}; }
};

struct TrigNode final : ExprNode {
  TrigNode(bool is_sin, double a, double w, double p)
      : ExprNode(is_sin ? Expr::Kind::Sin : Expr::Kind::Cos), sine(is_sin), amp(a), omega(w), phase(p) {}
  bool sine;
  double amp, omega, phase;

  double value(double t) const override {
    const double s = omega * t + phase;
    return amp * (sine ? std::sin(s) : std::cos(s));
  }
  double deriv(double t) const override {
    const double s = omega * t + phase;
    return amp * omega * (sine ? std::cos(s) : -std::sin(s));
  }
  Series series(const Series& x) const override {
    Series arg = series_scale(omega, x);
    arg[0] += Interval(phase);
    auto [s, c] = series_sincos(arg);
    return series_scale(amp, sine ? s : c);
  }
  Expr derivative(const Expr&) const override {
    if (sine) return Expr::cos(amp * omega, omega, phase);
    return Expr::sin(-amp * omega, omega, phase);
  }
  std::optional<Expr> antiderivative(const Expr&) const override {
    if (omega == 0.0) return Expr::poly({0.0, amp * (sine ? std::sin(phase) : std::cos(phase))});
    if (sine) return Expr::cos(-amp / omega, omega, phase);
    return Expr::sin(amp / omega, omega, phase);
  }
  bool catalogue() const override { return true; }
  std::size_t count() const override { return 1; }
  json to_json() const override {
    return {{"kind", sine ? "sin" : "cos"}, {"amp", amp}, {"omega", omega}, {"phase", phase}};
  }
};

std::size_t count_all(const std::vector<Expr>& args) {
  std::size_t n = 1;
  for (const auto& a : args) n += a.node_count();
  return n;
}

json args_json(const std::vector<Expr>& args) {
  json arr = json::array();
  for (const auto& a : args) arr.push_back(a.to_json());
  return arr;
}

bool all_catalogue(const std::vector<Expr>& args) {
  for (const auto& a : args)
    if (!a.is_catalogue()) return false;
  return true;
}

struct SumNode final : ExprNode {
  explicit SumNode(std::vector<Expr> a) : ExprNode(Expr::Kind::Sum), args(std::move(a)) {}
  std::vector<Expr> args;

  double value(double t) const override {
    double s = 0.0;
    for (const auto& a : args) s += a(t);
    return s;
  }
  double deriv(double t) const override {
    double s = 0.0;
    for (const auto& a : args) s += a.derivative_at(t);
    return s;
  }
  Series series(const Series& x) const override {
    Series r = series_const(0.0, x.size());
    for (const auto& a : args) r = series_add(r, a.node().series(x));
    return r;
  }
  Expr derivative(const Expr&) const override {
    std::vector<Expr> d;
    for (const auto& a : args) d.push_back(a.derivative());
    return Expr::sum(std::move(d));
  }
  std::optional<Expr> antiderivative(const Expr&) const override {
    std::vector<Expr> r;
    for (const auto& a : args) {
      auto p = a.antiderivative();
      if (!p) return std::nullopt;
      r.push_back(*p);
    }
    return Expr::sum(std::move(r));
  }
  bool catalogue() const override { return all_catalogue(args); }
  std::size_t count() const override { return count_all(args); }
  json to_json() const override { return {{"kind", "sum"}, {"args", args_json(args)}}; }
};

std::optional<Expr> poly_times_antiderivative(const std::vector<double>& p, const Expr& other);

struct ProdNode final : ExprNode {
  explicit ProdNode(std::vector<Expr> a) : ExprNode(Expr::Kind::Prod), args(std::move(a)) {}
  std::vector<Expr> args;

  double value(double t) const override {
    double s = 1.0;
    for (const auto& a : args) s *= a(t);
    return s;
  }
  double deriv(double t) const override {
    double total = 0.0;
    for (std::size_t i = 0; i < args.size(); ++i) {
      double term = args[i].derivative_at(t);
      for (std::size_t j = 0; j < args.size() && term != 0.0; ++j)
        if (j != i) term *= args[j](t);
      total += term;
    }
    return total;
  }
  Series series(const Series& x) const override {
    Series r = series_const(1.0, x.size());
    for (const auto& a : args) r = series_mul(r, a.node().series(x));
    return r;
  }
  Expr derivative(const Expr&) const override {
    std::vector<Expr> terms;
    for (std::size_t i = 0; i < args.size(); ++i) {
      Expr di = args[i].derivative();
      if (di.is_zero()) continue;
      std::vector<Expr> f;
      for (std::size_t j = 0; j < args.size(); ++j) f.push_back(j == i ? di : args[j]);
      terms.push_back(Expr::prod(std::move(f)));
    }
    return Expr::sum(std::move(terms));
  }
  std::optional<Expr> antiderivative(const Expr&) const override {
    // The constructor folds every polynomial factor into one; closed forms
    // exist for polynomial times a single exp/sin/cos factor.
    if (args.size() != 2) return std::nullopt;
    for (int i = 0; i < 2; ++i) {
      if (args[i].kind() == Expr::Kind::Poly) {
        const auto& pn = static_cast<const PolyNode&>(args[i].node());
        return poly_times_antiderivative(pn.coeffs, args[1 - i]);
      }
    }
    return std::nullopt;
  }
  bool catalogue() const override { return all_catalogue(args); }
  std::size_t count() const override { return count_all(args); }
  json to_json() const override { return {{"kind", "prod"}, {"args", args_json(args)}}; }
};

struct ScaleNode final : ExprNode {
  ScaleNode(double c_, Expr a) : ExprNode(Expr::Kind::Scale), c(c_), arg(std::move(a)) {}
  double c;
  Expr arg;

  double value(double t) const override { return c * arg(t); }
  double deriv(double t) const override { return c * arg.derivative_at(t); }
  Series series(const Series& x) const override { return series_scale(c, arg.node().series(x)); }
  Expr derivative(const Expr&) const override { return Expr::scale(c, arg.derivative()); }
  std::optional<Expr> antiderivative(const Expr&) const override {
    auto p = arg.antiderivative();
    if (!p) return std::nullopt;
    return Expr::scale(c, *p);
  }
  bool catalogue() const override { return arg.is_catalogue(); }
  std::size_t count() const override { return 1 + arg.node_count(); }
  json to_json() const override { return {{"kind", "scale"}, {"c", c}, {"arg", arg.to_json()}}; }
};

struct AffineNode final : ExprNode {
  AffineNode(double a_, double b_, Expr e) : ExprNode(Expr::Kind::Affine), a(a_), b(b_), arg(std::move(e)) {}
  double a, b;
  Expr arg;

  double value(double t) const override { return arg(a * t + b); }
  double deriv(double t) const override { return a * arg.derivative_at(a * t + b); }
  Series series(const Series& x) const override {
    Series inner = series_scale(a, x);
    inner[0] += Interval(b);
    return arg.node().series(inner);
  }
  Expr derivative(const Expr&) const override {
    return Expr::scale(a, Expr::affine(a, b, arg.derivative()));
  }
  std::optional<Expr> antiderivative(const Expr&) const override {
    if (a == 0.0) return Expr::poly({0.0, arg(b)});
    auto p = arg.antiderivative();
    if (!p) return std::nullopt;
    return Expr::scale(1.0 / a, Expr::affine(a, b, *p));
  }
  bool catalogue() const override { return arg.is_catalogue(); }
  std::size_t count() const override { return 1 + arg.node_count(); }
  json to_json() const override {
    return {{"kind", "affine_compose"}, {"a", a}, {"b", b}, {"arg", arg.to_json()}};
  }
};

struct ExpOfNode final : ExprNode {
  explicit ExpOfNode(Expr e) : ExprNode(Expr::Kind::ExpOf), arg(std::move(e)) {}
  Expr arg;

  double value(double t) const override { return std::exp(arg(t)); }
  double deriv(double t) const override { return value(t) * arg.derivative_at(t); }
  Series series(const Series& x) const override { return series_exp(arg.node().series(x)); }
  Expr derivative(const Expr& self) const override { return Expr::prod({self, arg.derivative()}); }
  bool catalogue() const override { return false; }
  std::size_t count() const override { return 1 + arg.node_count(); }
  json to_json() const override { return {{"kind", "exp_of"}, {"arg", arg.to_json()}}; }
};

struct RecipNode final : ExprNode {
  explicit RecipNode(Expr e) : ExprNode(Expr::Kind::Recip), arg(std::move(e)) {}
  Expr arg;

  double value(double t) const override { return 1.0 / arg(t); }
  double deriv(double t) const override {
    const double u = arg(t);
    return -arg.derivative_at(t) / (u * u);
  }
  Series series(const Series& x) const override { return series_recip(arg.node().series(x)); }
  Expr derivative(const Expr& self) const override {
    return Expr::scale(-1.0, Expr::prod({arg.derivative(), self, self}));
  }
  bool catalogue() const override { return false; }
  std::size_t count() const override { return 1 + arg.node_count(); }
  json to_json() const override { return {{"kind", "recip"}, {"arg", arg.to_json()}}; }
};

double signed_pow_value(double u, double p) {
  if (u == 0.0) return p == 0.0 ? 0.0 : (p > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  const double m = std::pow(std::abs(u), p);
  return u < 0.0 ? -m : m;
}

struct PowNode final : ExprNode {
  PowNode(Expr e, double p_, bool s) : ExprNode(s ? Expr::Kind::SignedPow : Expr::Kind::PowAbs), arg(std::move(e)), p(p_), signed_variant(s) {}
  Expr arg;
  double p;
  bool signed_variant;

  double value(double t) const override {
    const double u = arg(t);
    return signed_variant ? signed_pow_value(u, p) : std::pow(std::abs(u), p);
  }
  double deriv(double t) const override {
    const double u = arg(t);
    const double du = arg.derivative_at(t);
    if (du == 0.0) return 0.0;
    const double inner = signed_variant ? std::pow(std::abs(u), p - 1.0) : signed_pow_value(u, p - 1.0);
    return p * inner * du;
  }
  Series series(const Series& x) const override { return series_pow(arg.node().series(x), p, signed_variant); }
  Expr derivative(const Expr&) const override {
    Expr inner = signed_variant ? Expr::pow_abs(arg, p - 1.0) : Expr::signed_pow(arg, p - 1.0);
    return Expr::scale(p, Expr::prod({inner, arg.derivative()}));
  }
  bool catalogue() const override { return false; }
  std::size_t count() const override { return 1 + arg.node_count(); }
  json to_json() const override {
    return {{"kind", signed_variant ? "signed_pow" : "pow_abs"}, {"p", p}, {"arg", arg.to_json()}};
  }
};

struct IntegralNode final : ExprNode {
  IntegralNode(Expr e, double anchor_) : ExprNode(Expr::Kind::Integral), integrand(std::move(e)), anchor(anchor_) {}
  Expr integrand;
  double anchor;

  std::pair<double, double> quad(double t) const {
    if (t == anchor) return {0.0, 0.0};
    double err = 0.0;
    const auto f = [this](double s) { return integrand(s); };
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, anchor, t, 12, 1e-11, &err);
    return {v, err};
  }

  double value(double t) const override { return quad(t).first; }
  double deriv(double t) const override { return integrand(t); }
  Series series(const Series& x) const override {
    const double l = x[0].lo;
    Interval f0 = Interval::whole();
    if (std::isfinite(l)) {
      const auto [v, err] = quad(l);
      const double slack = err + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(v);
      const Interval at_l = detail::widen(v - slack, v + slack);
      const Interval g = integrand.node().series(series_variable(x[0], 0))[0];
      f0 = at_l + (x[0] - Interval(l)) * g;
    }
    return series_primitive(x, integrand.node().series(x), f0);
  }
  Expr derivative(const Expr&) const override { return integrand; }
  bool catalogue() const override { return false; }
  std::size_t count() const override { return 1 + integrand.node_count(); }
  json to_json() const override {
    return {{"kind", "integral"}, {"anchor", anchor}, {"arg", integrand.to_json()}};
  }
};

// Closed forms for p(t) times exp / sin / cos (possibly scaled).
std::optional<Expr> poly_times_antiderivative(const std::vector<double>& p, const Expr& other) {
  double c = 1.0;
  const ExprNode* node = &other.node();
  if (node->kind == Expr::Kind::Scale) {
    const auto& s = static_cast<const ScaleNode&>(*node);
    c = s.c;
    node = &s.arg.node();
  }
  std::vector<double> pc = p;
  for (double& v : pc) v *= c;
  if (node->kind == Expr::Kind::Exp) {
    const auto& e = static_cast<const ExpNode&>(*node);
    if (e.alpha == 0.0) return Expr::scale(std::exp(e.beta), Expr::poly(poly_integrate(pc)));
    // e^{αt+β} Σ (-1)^k p^{(k)} / α^{k+1}
    std::vector<double> acc{0.0};
    std::vector<double> d = pc;
    double sign = 1.0;
    double inv = 1.0 / e.alpha;
    while (!(d.size() == 1 && d[0] == 0.0)) {
      std::vector<double> term = d;
      for (double& v : term) v *= sign * inv;
      acc = poly_add(acc, term);
      d = poly_deriv(d);
      sign = -sign;
      inv /= e.alpha;
    }
    return Expr::prod({Expr::poly(acc), Expr::exp(e.alpha, e.beta)});
  }
  if (node->kind == Expr::Kind::Sin || node->kind == Expr::Kind::Cos) {
    const auto& tr = static_cast<const TrigNode&>(*node);
    if (tr.omega == 0.0) {
      const double k = tr.amp * (tr.sine ? std::sin(tr.phase) : std::cos(tr.phase));
      return Expr::scale(k, Expr::poly(poly_integrate(pc)));
    }
    // C = Σ (-1)^k p^{(k)} (iω)^{-(k+1)} = R + iI; with s = ωt+φ,
    // ∫ p sin s = R sin s + I cos s and ∫ p cos s = R cos s − I sin s.
    using cd = std::complex<double>;
    std::vector<double> re{0.0};
    std::vector<double> im{0.0};
    std::vector<double> d = pc;
    const cd step = cd(0.0, -1.0 / tr.omega);  // (iω)^{-1}
    cd factor = step;
    double sign = 1.0;
    while (!(d.size() == 1 && d[0] == 0.0)) {
      const cd f = sign * factor;
      std::vector<double> r = d;
      std::vector<double> i = d;
      for (double& v : r) v *= f.real();
      for (double& v : i) v *= f.imag();
      re = poly_add(re, r);
      im = poly_add(im, i);
      d = poly_deriv(d);
      sign = -sign;
      factor *= step;
    }
    const Expr sn = Expr::sin(tr.amp, tr.omega, tr.phase);
    const Expr cs = Expr::cos(tr.amp, tr.omega, tr.phase);
    if (tr.sine) return Expr::prod({Expr::poly(re), sn}) + Expr::prod({Expr::poly(im), cs});
    return Expr::prod({Expr::poly(re), cs}) - Expr::prod({Expr::poly(im), sn});
  }
  return std::nullopt;
}

const std::vector<double>* as_poly(const Expr& e) {
  if (e.kind() != Expr::Kind::Poly) return nullptr;
  return &static_cast<const PolyNode&>(e.node()).coeffs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Constructors with light normalisation

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double c) { return poly({c}); }

Expr Expr::poly(std::vector<double> coeffs) { return make_node<PolyNode>(std::move(coeffs)); }

Expr Expr::exp(double alpha, double beta) {
  if (alpha == 0.0) return constant(std::exp(beta));
  return make_node<ExpNode>(alpha, beta);
}

Expr Expr::sin(double amp, double omega, double phase) {
  if (amp == 0.0) return constant(0.0);
  if (omega == 0.0) return constant(amp * std::sin(phase));
  return make_node<TrigNode>(true, amp, omega, phase);
}

Expr Expr::cos(double amp, double omega, double phase) {
  if (amp == 0.0) return constant(0.0);
  if (omega == 0.0) return constant(amp * std::cos(phase));
  return make_node<TrigNode>(false, amp, omega, phase);
}

Expr Expr::sum(std::vector<Expr> args) {
  // Flatten nested sums and scalings, then merge multiples of one node.
  std::vector<std::pair<Expr, double>> terms;
  std::vector<double> poly_part{0.0};
  bool has_poly = false;
  std::function<void(const Expr&, double)> push = [&](const Expr& e, double c) {
    if (e.kind() == Kind::Sum) {
      for (const auto& x : static_cast<const SumNode&>(e.node()).args) push(x, c);
    } else if (e.kind() == Kind::Scale) {
      const auto& n = static_cast<const ScaleNode&>(e.node());
      push(n.arg, c * n.c);
    } else if (const auto* p = as_poly(e)) {
      std::vector<double> q = *p;
      for (double& v : q) v *= c;
      poly_part = poly_add(poly_part, q);
      has_poly = true;
    } else {
      for (auto& [x, k] : terms) {
        if (x.node_ == e.node_) {
          k += c;
          return;
        }
      }
      terms.emplace_back(e, c);
    }
  };
  for (const auto& a : args) push(a, 1.0);
  std::vector<Expr> flat;
  for (auto& [x, k] : terms)
    if (k != 0.0) flat.push_back(scale(k, x));
  poly_part = trim(poly_part);
  if (has_poly && !(poly_part.size() == 1 && poly_part[0] == 0.0)) flat.push_back(poly(poly_part));
  if (flat.empty()) return constant(0.0);
  if (flat.size() == 1) return flat.front();
  return make_node<SumNode>(std::move(flat));
}

Expr Expr::prod(std::vector<Expr> args) {
  std::vector<Expr> flat;
  std::vector<double> poly_part{1.0};
  double c = 1.0;
  for (auto& a : args) {
    std::vector<Expr> items;
    if (a.kind() == Kind::Prod) {
      items = static_cast<const ProdNode&>(a.node()).args;
    } else {
      items.push_back(a);
    }
    for (auto& it : items) {
      if (it.kind() == Kind::Scale) {
        const auto& s = static_cast<const ScaleNode&>(it.node());
        c *= s.c;
        it = s.arg;
      }
      if (const auto* p = as_poly(it)) {
        poly_part = poly_mul(poly_part, *p);
      } else {
        flat.push_back(it);
      }
    }
  }
  for (double& v : poly_part) v *= c;
  poly_part = trim(poly_part);
  if (poly_part.size() == 1 && poly_part[0] == 0.0) return constant(0.0);
  if (flat.empty()) return poly(poly_part);
  Expr rest = flat.size() == 1 ? flat.front() : make_node<ProdNode>(flat);
  if (poly_part.size() == 1) return scale(poly_part[0], rest);
  std::vector<Expr> all{poly(poly_part)};
  if (flat.size() == 1) {
    all.push_back(rest);
  } else {
    all.insert(all.end(), flat.begin(), flat.end());
  }
  return make_node<ProdNode>(std::move(all));
}

Expr Expr::scale(double c, Expr arg) {
  if (c == 0.0) return constant(0.0);
  if (c == 1.0) return arg;
  if (const auto* p = as_poly(arg)) {
    std::vector<double> r = *p;
    for (double& v : r) v *= c;
    return poly(std::move(r));
  }
  if (arg.kind() == Kind::Scale) {
    const auto& s = static_cast<const ScaleNode&>(arg.node());
    return scale(c * s.c, s.arg);
  }
  return make_node<ScaleNode>(c, std::move(arg));
}

Expr Expr::affine(double a, double b, Expr arg) {
  if (arg.is_constant()) return arg;
  if (a == 1.0 && b == 0.0) return arg;
  if (a == 0.0) return constant(arg(b));
  switch (arg.kind()) {
    case Kind::Affine: {
      const auto& n = static_cast<const AffineNode&>(arg.node());
      return affine(n.a * a, n.a * b + n.b, n.arg);
    }
    case Kind::Exp: {
      const auto& n = static_cast<const ExpNode&>(arg.node());
      return exp(n.alpha * a, n.alpha * b + n.beta);
    }
    case Kind::Sin:
    case Kind::Cos: {
      const auto& n = static_cast<const TrigNode&>(arg.node());
      return n.sine ? sin(n.amp, n.omega * a, n.omega * b + n.phase)
                    : cos(n.amp, n.omega * a, n.omega * b + n.phase);
    }
    case Kind::Scale: {
      const auto& n = static_cast<const ScaleNode&>(arg.node());
      return scale(n.c, affine(a, b, n.arg));
    }
    default:
      break;
  }
  const auto* p = as_poly(arg);
  if (p && p->size() == 2) return poly({(*p)[0] + (*p)[1] * b, (*p)[1] * a});
  return make_node<AffineNode>(a, b, std::move(arg));
}

Expr Expr::difference(double h) const {
  if (h == 0.0 || is_constant()) return constant(0.0);
  if (const auto* p = as_poly(*this)) {
    // d_k = sum_{i > k} c_i binom(i, k) h^(i - k)
    const std::size_t n = p->size();
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      double binom = 1.0;
      double hp = 1.0;
      for (std::size_t k = i; k-- > 0;) {
        binom = binom * static_cast<double>(k + 1) / static_cast<double>(i - k);
        hp *= h;
        d[k] += (*p)[i] * binom * hp;
      }
    }
    return poly(std::move(d));
  }
  switch (kind()) {
    case Kind::Exp: {
      const auto& n = static_cast<const ExpNode&>(node());
      return scale(std::expm1(n.alpha * h), *this);
    }
    case Kind::Sin:
    case Kind::Cos: {
      const auto& n = static_cast<const TrigNode&>(node());
      const double half = 0.5 * n.omega * h;
      const double k = 2.0 * n.amp * std::sin(half);
      return n.sine ? cos(k, n.omega, n.phase + half) : sin(-k, n.omega, n.phase + half);
    }
    case Kind::Scale: {
      const auto& n = static_cast<const ScaleNode&>(node());
      return scale(n.c, n.arg.difference(h));
    }
    case Kind::Sum: {
      const auto& n = static_cast<const SumNode&>(node());
      std::vector<Expr> parts;
      for (const auto& a : n.args) parts.push_back(a.difference(h));
      return sum(std::move(parts));
    }
    case Kind::Affine: {
      const auto& n = static_cast<const AffineNode&>(node());
      return affine(n.a, n.b, n.arg.difference(n.a * h));
    }
    default:
      return affine(1.0, h, *this) - *this;
  }
}

Expr Expr::exp_of(Expr arg) {
  if (arg.is_constant()) return constant(std::exp(arg.constant_value()));
  if (const auto* p = as_poly(arg); p && p->size() == 2) return exp((*p)[1], (*p)[0]);
  return make_node<ExpOfNode>(std::move(arg));
}

Expr Expr::recip(Expr arg) {
  if (arg.is_constant()) return constant(1.0 / arg.constant_value());
  if (arg.kind() == Kind::Recip) return static_cast<const RecipNode&>(arg.node()).arg;
  return make_node<RecipNode>(std::move(arg));
}

Expr Expr::pow_abs(Expr arg, double p) {
  if (p == 0.0) return constant(1.0);
  if (arg.is_constant()) return constant(std::pow(std::abs(arg.constant_value()), p));
  if (p == 2.0) return prod({arg, arg});
  return make_node<PowNode>(std::move(arg), p, false);
}

Expr Expr::signed_pow(Expr arg, double p) {
  if (arg.is_constant()) return constant(signed_pow_value(arg.constant_value(), p));
  if (p == 1.0) return arg;
  return make_node<PowNode>(std::move(arg), p, true);
}

Expr Expr::integral(Expr integrand, double anchor) {
  if (integrand.is_constant()) {
    const double c = integrand.constant_value();
    return poly({-c * anchor, c});
  }
  return make_node<IntegralNode>(std::move(integrand), anchor);
}

// ---------------------------------------------------------------------------
// Queries

Expr::Kind Expr::kind() const { return node_->kind; }

double Expr::operator()(double t) const { return node_->value(t); }

double Expr::derivative_at(double t) const { return node_->deriv(t); }

Series Expr::taylor(Interval t, int order) const {
  return node_->series(series_variable(t, order));
}

Interval Expr::enclose(Interval t) const {
  if (t.lo == t.hi) return node_->series(series_variable(t, 0))[0];
  const Series s = taylor(t, 1);
  // Mean-value form around the midpoint, intersected with the direct range.
  const double m = t.mid();
  const Interval fm = node_->series(series_variable(Interval(m), 0))[0];
  const Interval mv = fm + s[1] * (t - Interval(m));
  const Interval r = intersect(s[0], mv);
  if (r.lo > r.hi) return hull(s[0], mv);
  return r;
}

Expr Expr::derivative() const { return node_->derivative(*this); }

std::optional<Expr> Expr::antiderivative() const { return node_->antiderivative(*this); }

Expr Expr::primitive(double anchor) const {
  if (auto p = antiderivative()) {
    const double at = (*p)(anchor);
    return *p + (-at);
  }
  return integral(*this, anchor);
}

bool Expr::is_constant() const {
  const auto* p = as_poly(*this);
  return p && p->size() == 1;
}

double Expr::constant_value() const {
  const auto* p = as_poly(*this);
  return p ? (*p)[0] : 0.0;
}

bool Expr::is_catalogue() const { return node_->catalogue(); }

std::size_t Expr::node_count() const { return node_->count(); }

json Expr::to_json() const { return node_->to_json(); }

Expr operator+(const Expr& x, const Expr& y) { return Expr::sum({x, y}); }
Expr operator-(const Expr& x, const Expr& y) { return Expr::sum({x, Expr::scale(-1.0, y)}); }
Expr operator*(const Expr& x, const Expr& y) { return Expr::prod({x, y}); }
Expr operator+(const Expr& x, double c) {
  if (c == 0.0) return x;
  return Expr::sum({x, Expr::constant(c)});
}
Expr operator*(double c, const Expr& x) { return Expr::scale(c, x); }

// ---------------------------------------------------------------------------
// JSON

Expr Expr::from_json(const json& j, const std::string& pointer) {
  if (!j.is_object()) throw DocumentError(ErrorKind::Schema, pointer, "expression must be an object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw DocumentError(ErrorKind::Schema, pointer, "expression needs a string 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  auto parse_args = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty())
      throw DocumentError(ErrorKind::Schema, pointer, std::string("'") + key + "' must be a non-empty array");
    std::vector<Expr> out;
    const auto& arr = j.at(key);
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.push_back(from_json(arr[i], pointer + "/" + key + "/" + std::to_string(i)));
    return out;
  };
  auto parse_arg = [&]() {
    if (!j.contains("arg")) throw DocumentError(ErrorKind::Schema, pointer, "missing field 'arg'");
    return from_json(j.at("arg"), pointer + "/arg");
  };
  if (kind == "poly") {
    if (!j.contains("coeffs") || !j.at("coeffs").is_array() || j.at("coeffs").empty())
      throw DocumentError(ErrorKind::Schema, pointer, "'coeffs' must be a non-empty array");
    std::vector<double> c;
    const auto& arr = j.at("coeffs");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number() || !std::isfinite(arr[i].get<double>()))
        throw DocumentError(ErrorKind::Schema, pointer + "/coeffs/" + std::to_string(i), "expected a finite number");
      c.push_back(arr[i].get<double>());
    }
    return poly(std::move(c));
  }
  if (kind == "exp") return exp(require_number(j, "alpha", pointer), require_number(j, "beta", pointer));
  if (kind == "sin" || kind == "cos") {
    const double amp = require_number(j, "amp", pointer);
    const double omega = require_number(j, "omega", pointer);
    const double phase = require_number(j, "phase", pointer);
    return kind == "sin" ? sin(amp, omega, phase) : cos(amp, omega, phase);
  }
  if (kind == "sum") return sum(parse_args("args"));
  if (kind == "prod") return prod(parse_args("args"));
  if (kind == "scale") return scale(require_number(j, "c", pointer), parse_arg());
  if (kind == "affine_compose") {
    const double a = require_number(j, "a", pointer);
    const double b = require_number(j, "b", pointer);
    return affine(a, b, parse_arg());
  }
  throw DocumentError(ErrorKind::Schema, pointer + "/kind", "unknown expression kind '" + kind + "'");
}

}  // namespace saltus
