#pragma once

#include "saltus/expr.hpp"
#include "saltus/interval.hpp"

namespace saltus {

struct QuadResult {
  Interval enclosure;
  int depth = 0;
  long cells = 0;
  double value() const { return enclosure.mid(); }
  double error() const { return 0.5 * enclosure.width(); }
};

/// Validated integral of e over [u, v]. Closed-form antiderivatives are used
/// when the node admits one; otherwise three-point Gauss-Legendre with a
/// sixth-derivative remainder enclosure, intersected with the range bound,
/// under adaptive bisection until the width is at most tol or max_depth.
QuadResult integrate(const Expr& e, double u, double v, double tol, int max_depth = 24);

/// Tight enclosure of the range of e over [u, v]: endpoint values and the
/// values at isolated critical points, with enclosures of unresolved cells.
Interval expr_range(const Expr& e, double u, double v);

}  // namespace saltus
