#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace saltus {

/// Closed interval with outward rounding by one ulp on every operation.
/// Enclosures are the basis of all certified bounds in the library, so an
/// empty or NaN interval is never produced: NaN collapses to the whole line.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT(implicit)
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static Interval whole() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool strictly_positive() const { return lo > 0.0; }
  bool strictly_negative() const { return hi < 0.0; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

namespace detail {

inline double down(double v) {
  return std::isfinite(v) ? std::nextafter(v, -std::numeric_limits<double>::infinity()) : v;
}
inline double up(double v) {
  return std::isfinite(v) ? std::nextafter(v, std::numeric_limits<double>::infinity()) : v;
}

inline Interval widen(double l, double h) {
  if (std::isnan(l) || std::isnan(h)) return Interval::whole();
  return {down(l), up(h)};
}

}  // namespace detail

inline Interval hull(Interval x, Interval y) {
  return {std::min(x.lo, y.lo), std::max(x.hi, y.hi)};
}

inline Interval intersect(Interval x, Interval y) {
  return {std::max(x.lo, y.lo), std::min(x.hi, y.hi)};
}

inline Interval operator-(Interval x) { return {-x.hi, -x.lo}; }

inline Interval operator+(Interval x, Interval y) {
  return detail::widen(x.lo + y.lo, x.hi + y.hi);
}

inline Interval operator-(Interval x, Interval y) {
  return detail::widen(x.lo - y.hi, x.hi - y.lo);
}

inline Interval operator*(Interval x, Interval y) {
  // 0 * inf is taken as 0: both factors are enclosures of finite values.
  auto mul = [](double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
  };
  const double p1 = mul(x.lo, y.lo);
  const double p2 = mul(x.lo, y.hi);
  const double p3 = mul(x.hi, y.lo);
  const double p4 = mul(x.hi, y.hi);
  return detail::widen(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline Interval reciprocal(Interval x) {
  if (x.contains_zero()) return Interval::whole();
  return detail::widen(1.0 / x.hi, 1.0 / x.lo);
}

inline Interval operator/(Interval x, Interval y) { return x * reciprocal(y); }

inline Interval& operator+=(Interval& x, Interval y) { return x = x + y; }
inline Interval& operator*=(Interval& x, Interval y) { return x = x * y; }

inline Interval exp(Interval x) {
  return detail::widen(std::exp(x.lo), std::exp(x.hi));
}

inline Interval abs(Interval x) {
  if (x.lo >= 0.0) return x;
  if (x.hi <= 0.0) return -x;
  return {0.0, std::max(-x.lo, x.hi)};
}

/// |x|^p for real p; for negative p the result is unbounded when x touches 0.
inline Interval pow_abs(Interval x, double p) {
  const Interval m = abs(x);
  if (p == 0.0) return 1.0;
  if (p > 0.0) {
    return detail::widen(std::pow(m.lo, p), std::pow(m.hi, p));
  }
  if (m.lo <= 0.0) return Interval::whole();
  return detail::widen(std::pow(m.hi, p), std::pow(m.lo, p));
}

inline Interval pow_int(Interval x, int n) {
  if (n == 0) return 1.0;
  if (n == 1) return x;
  if (n % 2 == 0) {
    const Interval m = abs(x);
    return detail::widen(std::pow(m.lo, n), std::pow(m.hi, n));
  }
  return detail::widen(std::pow(x.lo, n), std::pow(x.hi, n));
}

/// Enclosure of sin over x. Extrema are detected from the quarter-period
/// lattice crossed by the argument interval.
inline Interval sin(Interval x) {
  if (!x.bounded() || x.width() >= 2.0 * std::numbers::pi) return {-1.0, 1.0};
  double lo = std::min(std::sin(x.lo), std::sin(x.hi));
  double hi = std::max(std::sin(x.lo), std::sin(x.hi));
  constexpr double half_pi = std::numbers::pi / 2.0;
  // Maxima at pi/2 + 2k pi, minima at -pi/2 + 2k pi.
  const double kmax = std::ceil((x.lo - half_pi) / (2.0 * std::numbers::pi));
  if (half_pi + 2.0 * std::numbers::pi * kmax <= x.hi) hi = 1.0;
  const double kmin = std::ceil((x.lo + half_pi) / (2.0 * std::numbers::pi));
  if (-half_pi + 2.0 * std::numbers::pi * kmin <= x.hi) lo = -1.0;
  Interval r = detail::widen(lo, hi);
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

inline Interval cos(Interval x) {
  return sin(x + Interval(std::numbers::pi / 2.0));
}

}  // namespace saltus
