#include "saltus/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saltus/funcrep.hpp"

namespace saltus {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Point enclosure of e(t).
Interval at(const Expr& e, double t) { return e.enclose(Interval(t)); }

struct Adaptive {
  const Expr& e;
  double total_tol;
  double length;
  int max_depth;
  Interval sum{0.0};
  int depth = 0;
  long cells = 0;

  // Sets floor when the rule is limited by rounding in the point values;
  // halving such a panel cannot narrow the sum.
  Interval panel(double l, double r, bool& floor) const {
    floor = false;
    const double h = r - l;
    const Interval hi(h);
    const Series s = e.taylor(Interval(l, r), 6);
    const Interval darboux = hi * s[0];
    if (!darboux.bounded()) return darboux;
    static const double x = std::sqrt(0.6);
    const double m = 0.5 * (l + r);
    const Interval q = (Interval(5.0 / 18.0) * (at(e, m - 0.5 * h * x) + at(e, m + 0.5 * h * x)) +
                        Interval(8.0 / 18.0) * at(e, m)) *
                       hi;
    // Gauss-Legendre 3: error = h^7 f^(6)(xi) / 2016000 and f^(6) = 720 c6.
    const double rem = std::pow(h, 7) * s[6].mag() / 2800.0 * (1.0 + 8.0 * kEps);
    Interval g(q.lo - rem, q.hi + rem);
    if (!g.bounded()) return darboux;
    floor = q.width() >= rem;
    const Interval both = intersect(g, darboux);
    return both.lo <= both.hi ? both : g;
  }

  void run(double l, double r, int d) {
    bool floor = false;
    const Interval p = panel(l, r, floor);
    const double local = total_tol * (r - l) / length;
    if ((p.bounded() && (p.width() <= local || floor)) || d >= max_depth) {
      sum += p;
      depth = std::max(depth, d);
      ++cells;
      return;
    }
    const double m = 0.5 * (l + r);
    if (!(m > l && m < r)) {
      sum += p;
      depth = std::max(depth, d);
      ++cells;
      return;
    }
    run(l, m, d + 1);
    run(m, r, d + 1);
  }
};

}  // namespace

QuadResult integrate(const Expr& e, double u, double v, double tol, int max_depth) {
  QuadResult out;
  if (!(v > u)) return out;
  if (e.is_constant()) {
    out.enclosure = Interval(e.constant_value()) * Interval(v - u);
    out.cells = 1;
    return out;
  }
  if (auto F = e.antiderivative()) {
    const Interval val = at(*F, v) - at(*F, u);
    if (val.bounded() && val.width() <= std::max(tol, 1e-12 * std::max(1.0, val.mag()))) {
      out.enclosure = val;
      out.cells = 1;
      return out;
    }
  }
  Adaptive a{e, tol, v - u, max_depth};
  a.run(u, v, 0);
  out.enclosure = a.sum;
  out.depth = a.depth;
  out.cells = a.cells;
  return out;
}

Interval expr_range(const Expr& e, double u, double v) {
  if (e.is_constant()) return Interval(e.constant_value());
  Interval out = hull(at(e, u), at(e, v));
  const Interval naive = e.enclose(Interval(u, v));
  if (naive.width() <= 1e-15 * std::max(1.0, naive.mag())) return naive;
  const RootScan s = scan_roots(e.derivative(), u, v, 40);
  for (double r : s.roots) out = hull(out, at(e, r));
  for (const auto& [l, r] : s.uncertain) out = hull(out, e.enclose(Interval(l, r)));
  const double slack = 4.0 * kEps * out.mag();
  out = Interval(out.lo - slack, out.hi + slack);
  const Interval both = intersect(out, naive);
  return both.lo <= both.hi ? both : out;
}

}  // namespace saltus
