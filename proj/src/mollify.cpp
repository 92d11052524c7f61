#include "saltus/mollify.hpp"

#include <algorithm>
#include <cmath>

#include "saltus/errors.hpp"
#include "saltus/quadrature.hpp"
#include "saltus/rs_engine.hpp"
#include "saltus/star_engine.hpp"
#include "saltus/variation.hpp"

namespace saltus {

namespace {

// Running integrals of one rl part, extended by its end values outside
// [a, b]. Regions: -1 left extension, 0..n-1 cells, n right extension.
class Windows {
 public:
  Windows(const RepFunc& y, const Options& opt) : a_(y.a()), b_(y.b()), ya_(y(y.a())), yb_(y(y.b())) {
    const std::vector<const RepFunc*> fs{&y};
    for (const auto& c : cells_of(y, merged_points(fs))) {
      const double mass = integrate(c.expr, c.u, c.v, opt.tol * (c.v - c.u) / (b_ - a_), opt.max_depth).value();
      cells_.push_back({c.u, c.v, c.expr, mass});
    }
  }

  /// int_{t+lo}^{t+hi} y(s) ds for t in (u, v); each end stays in one region.
  Expr window(double u, double v, double lo, double hi) const {
    const double m = 0.5 * (u + v);
    const int i = region(m + lo);
    const int j = region(m + hi);
    if (i == j) return antider(i, lo).difference(hi - lo);
    Expr e = Expr::scale(-1.0, antider_from(i, right_end(i), lo));
    double mid = 0.0;
    for (int k = i + 1; k < j; ++k) mid += cells_[static_cast<std::size_t>(k)].mass;
    return e + antider_from(j, left_end(j), hi) + mid;
  }

 private:
  struct Seg {
    double u, v;
    Expr expr;
    double mass;
  };

  int n() const { return static_cast<int>(cells_.size()); }
  int region(double s) const {
    if (s <= a_) return -1;
    if (s >= b_) return n();
    const auto it = std::upper_bound(cells_.begin(), cells_.end(), s, [](double t, const Seg& c) { return t < c.v; });
    return static_cast<int>(it - cells_.begin());
  }
  double left_end(int r) const { return r == n() ? b_ : cells_[static_cast<std::size_t>(r)].u; }
  double right_end(int r) const { return r < 0 ? a_ : cells_[static_cast<std::size_t>(r)].v; }
  Expr integrand(int r) const {
    if (r < 0) return Expr::constant(ya_);
    if (r >= n()) return Expr::constant(yb_);
    return cells_[static_cast<std::size_t>(r)].expr;
  }
  // Some antiderivative of region r, composed with t + shift.
  Expr antider(int r, double shift) const {
    const Expr p = integrand(r).primitive(r < 0 ? a_ : left_end(r));
    return shift == 0.0 ? p : Expr::affine(1.0, shift, p);
  }
  // int_{anchor}^{t + shift} over region r.
  Expr antider_from(int r, double anchor, double shift) const {
    const Expr p = integrand(r).primitive(anchor);
    return shift == 0.0 ? p : Expr::affine(1.0, shift, p);
  }

  double a_, b_, ya_, yb_;
  std::vector<Seg> cells_;
};

}  // namespace

RepFunc mollify(const RepFunc& y0, double eps, const Options& opt) {
  if (!(eps > 0.0)) fail(ErrorKind::Domain, "eps must be positive");
  const double a = y0.a();
  const double b = y0.b();
  if (!(eps < 0.5 * (b - a))) fail(ErrorKind::EpsTooLarge, "eps must be below half the domain length");
  const RepFunc y = drop_overrides(truncate_series(y0, opt.series_tol).first);
  const auto [yp, ym] = rl_split(y);
  const Windows P(yp, opt);
  const Windows M(ym, opt);

  const std::vector<const RepFunc*> fs{&y};
  std::vector<double> pts{a, b};
  for (double t : merged_points(fs)) {
    for (double s : {t - eps, t, t + eps})
      if (s > a && s < b) pts.push_back(s);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  RepFunc::Parts p;
  const double k = 1.0 / eps;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double u = pts[i - 1];
    const double v = pts[i];
    const Expr e = Expr::scale(k, P.window(u, v, 0.0, eps) + M.window(u, v, -eps, 0.0));
    p.pieces.push_back({u, v, e});
  }
  return RepFunc(a, b, std::move(p), -1.0);
}

double sup_deviation(const RepFunc& y, const RepFunc& y_eps, double eps, int samples) {
  std::vector<double> bad;
  for (const auto& s : y.special_points())
    if (discontinuous_at(y, s.value())) bad.push_back(s.value());
  const double lo = y.a() + eps;
  const double hi = y.b() - eps;
  double dev = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = lo + (hi - lo) * i / (samples - 1);
    bool skip = false;
    for (double c : bad) skip = skip || std::abs(t - c) <= eps;
    if (y.series()) {
      const auto& s = *y.series();
      const double acc = s.side() == JumpSeries::Side::Left ? y.a() : y.b();
      skip = skip || std::abs(t - acc) <= s.c() + eps;
    }
    if (!skip) dev = std::max(dev, std::abs(y_eps(t) - y(t)));
  }
  return dev;
}

MollifyReport mollify_convergence_report(const RepFunc& x, const RepFunc& g, const std::vector<double>& eps_grid,
                                         const Options& opt) {
  require_same_domain(x, g);
  if (eps_grid.empty()) fail(ErrorKind::Domain, "eps grid is empty");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] < eps_grid[i - 1])) fail(ErrorKind::Domain, "eps grid must be strictly decreasing");
  MollifyReport r;
  const RepFunc xs = drop_overrides(truncate_series(x, opt.series_tol).first);
  const RepFunc gs = drop_overrides(truncate_series(g, opt.series_tol).first);
  r.reference = star_integral(x, g, opt).value;
  r.variation_g = total_variation(g, opt).value;
  double corr = 0.0;
  for (const auto& s : xs.special_points()) {
    const double t = s.value();
    if (!discontinuous_at(gs, t)) continue;
    const auto [xm, xp] = side_jumps(xs, t);
    const auto [gm, gp] = side_jumps(gs, t);
    corr += xp * gp - xm * gm;
  }
  r.shared_limit = r.reference + 0.5 * corr;
  for (double eps : eps_grid) {
    MollifyRow row;
    row.eps = eps;
    const RepFunc xe = mollify(x, eps, opt);
    const RepFunc ge = mollify(g, eps, opt);
    const Enclosure e = rs_integral(xe, ge, opt);
    row.integral = e.value();
    row.error_bound = e.error();
    row.int_dev = std::abs(row.integral - r.reference);
    row.var_dev = std::abs(total_variation(ge, opt).value - r.variation_g);
    row.var_phi = variation_of_indefinite(xe, ge, opt).value;
    row.sup_dev = std::max(sup_deviation(xs, xe, eps), sup_deviation(gs, ge, eps));
    r.rows.push_back(row);
  }
  return r;
}

}  // namespace saltus
