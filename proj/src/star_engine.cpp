#include "saltus/star_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saltus/errors.hpp"
#include "saltus/quadrature.hpp"
#include "saltus/variation.hpp"

namespace saltus {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// First n + 1 generated points of the series of f (fewer if they collide).
std::vector<double> series_points(const RepFunc& f, long n) {
  std::vector<double> out;
  if (!f.series()) return out;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (long k = 0; k <= n; ++k) {
    const double t = f.series()->location(k, f.a(), f.b());
    if (t == prev) break;
    out.push_back(t);
    prev = t;
  }
  return out;
}

}  // namespace

StarResult star_integral(const RepFunc& f, const RepFunc& g, const Options& opt) {
  return star_integral(f, g, f.a(), f.b(), opt);
}

StarResult star_integral(const RepFunc& f, const RepFunc& g, double c, double d, const Options& opt) {
  require_same_domain(f, g);
  if (!(c >= f.a() && d <= f.b() && c <= d)) fail(ErrorKind::Domain, "integration interval outside the domain");
  if (!std::isfinite(g.jump_mass())) fail(ErrorKind::UnsupportedPair, "integrator jumps are not absolutely summable");
  StarResult r;
  if (c == d) return r;
  const ContinuousIntegral ci = integrate_continuous(f, g, c, d, opt);
  const JumpTerms jt = jump_terms(f, g, c, d, opt);
  r.rs_part = ci.enclosure.mid();
  r.boundary_left = jt.left;
  r.interior_sum = jt.interior;
  r.boundary_right = jt.right;
  r.value = r.rs_part + r.boundary_left + r.interior_sum + r.boundary_right;
  r.error_bound = 0.5 * ci.enclosure.width() + jt.error + 4.0 * kEps * std::abs(r.value);
  r.depth = ci.depth;
  r.series_terms = jt.series_terms;
  return r;
}

Indefinite star_indefinite(const RepFunc& f, const RepFunc& g, const Options& opt) {
  require_same_domain(f, g);
  const double norm = std::max(1.0, sup_abs(f));
  const auto [gt, gdrop] = truncate_series(g, opt.series_tol / norm);
  const auto [ft, fdrop] = truncate_series(f, opt.series_tol);
  const std::vector<const RepFunc*> both{&ft, &gt};
  const auto pts = merged_points(both);
  const auto cells = cells_of(ft, pts);
  RepFunc::Parts p;
  double acc = 0.0;
  double err = norm * gdrop;
  double vgc = 0.0;
  bool any = false;
  for (const auto& cell : cells) {
    Expr dg;
    const int i = gt.piece_index(0.5 * (cell.u + cell.v));
    if (i >= 0) dg = gt.pieces()[static_cast<std::size_t>(i)].expr.derivative();
    if (dg.is_zero()) {
      p.pieces.push_back({cell.u, cell.v, Expr::constant(acc)});
      continue;
    }
    any = true;
    vgc += (cell.v - cell.u) * dg.enclose(Interval(cell.u, cell.v)).mag();
    const Expr integrand = cell.expr * dg;
    const QuadResult q = integrate(integrand, cell.u, cell.v, opt.tol * (cell.v - cell.u) / (f.b() - f.a()), opt.max_depth);
    p.pieces.push_back({cell.u, cell.v, integrand.primitive(cell.u) + acc});
    acc += q.value();
    err += q.error();
  }
  if (!any) p.pieces.clear();
  err += fdrop * vgc;
  for (const auto& s : gt.special_points()) {
    const double t = s.value();
    const auto [sm, sp] = side_jumps(gt, t);
    const double ft_val = f(t);
    const double left = t == f.a() ? 0.0 : ft_val * sm;
    const double right = t == f.b() ? 0.0 : ft_val * sp;
    if (left != 0.0 || right != 0.0) p.jumps.push_back({s, left, right});
  }
  return {RepFunc(f.a(), f.b(), std::move(p), -1.0), err};
}

StarResult variation_of_indefinite(const RepFunc& f, const RepFunc& g, const Options& opt) {
  return star_integral(abs(f, opt), variation_function(g, opt).first, opt);
}

Residual star_by_parts_residual(const RepFunc& f, const RepFunc& g, const Options& opt) {
  require_same_domain(f, g);
  const StarResult x = star_integral(f, g, opt);
  const StarResult y = star_integral(g, f, opt);
  Residual r;
  r.lhs = x.value + y.value;
  r.boundary = f(f.b()) * g(g.b()) - f(f.a()) * g(g.a());
  double tail = 0.0;
  auto add_common = [&](double t) {
    if (!discontinuous_at(f, t) || !discontinuous_at(g, t)) return;
    const auto [fm, fp] = side_jumps(f, t);
    const auto [gm, gp] = side_jumps(g, t);
    r.correction += fp * gp - fm * gm;
  };
  for (const auto& s : f.special_points()) add_common(s.value());
  if (f.series()) {
    const long n = f.series()->terms_for(opt.series_tol / std::max(1.0, g.jump_mass()));
    const auto pts = series_points(f, n);
    for (double t : pts) add_common(t);
    tail = f.series()->tail_bound(static_cast<long>(pts.size()) - 1) * g.jump_mass();
  }
  r.residual = r.lhs - r.boundary + r.correction;
  r.bound = x.error_bound + y.error_bound + tail +
            8.0 * kEps * (std::abs(x.value) + std::abs(y.value) + std::abs(r.boundary) + std::abs(r.correction) + 1.0);
  return r;
}

TwoSided star_fubini(const SeparableKernel& h, const RepFunc& f, const RepFunc& g, const Options& opt) {
  if (h.terms.empty()) fail(ErrorKind::UnsupportedKernel, "kernel has no separable terms");
  for (const auto& [u, v] : h.terms) {
    if (u.a() != f.a() || u.b() != f.b() || v.a() != g.a() || v.b() != g.b())
      fail(ErrorKind::UnsupportedKernel, "kernel factors must live on the domains of f and g");
  }
  const double vf = total_variation(f, opt).enclosure.hi;
  const double vg = total_variation(g, opt).enclosure.hi;
  RepFunc inner_t = RepFunc::constant(f.a(), f.b(), 0.0);
  RepFunc inner_s = RepFunc::constant(g.a(), g.b(), 0.0);
  double bound = 0.0;
  for (const auto& [u, v] : h.terms) {
    const StarResult iv = star_integral(v, g, opt);
    const StarResult iu = star_integral(u, f, opt);
    inner_t = add(inner_t, scale(u, iv.value));
    inner_s = add(inner_s, scale(v, iu.value));
    bound += iv.error_bound * sup_abs(u) * vf + iu.error_bound * sup_abs(v) * vg;
  }
  const StarResult l = star_integral(inner_t, f, opt);
  const StarResult r = star_integral(inner_s, g, opt);
  TwoSided out;
  out.lhs = l.value;
  out.rhs = r.value;
  out.bound = bound + l.error_bound + r.error_bound + 8.0 * kEps * (std::abs(l.value) + std::abs(r.value));
  return out;
}

namespace {

// ||x||_p from (*) int |x|^p dg, as value and half-width.
std::pair<double, double> p_norm(const RepFunc& x, const RepFunc& g, double p, const Options& opt) {
  const StarResult s = star_integral(pow_abs(x, p, opt), g, opt);
  const double v = std::max(0.0, s.value);
  const double lo = std::pow(std::max(0.0, v - s.error_bound), 1.0 / p);
  const double hi = std::pow(v + s.error_bound, 1.0 / p);
  const double mid = std::pow(v, 1.0 / p);
  return {mid, std::max(hi - mid, mid - lo)};
}

void check_pair(const RepFunc& g, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) fail(ErrorKind::BadExponent, "exponent p must satisfy p > 1");
  if (!is_increasing(g)) fail(ErrorKind::NotIncreasing, "the integrator must be increasing");
}

}  // namespace

TwoSided holder_check(const RepFunc& x, const RepFunc& y, const RepFunc& g, double p, const Options& opt) {
  check_pair(g, p);
  const double q = p / (p - 1.0);
  const StarResult l = star_integral(abs(mul(x, y), opt), g, opt);
  const auto [nx, ex] = p_norm(x, g, p, opt);
  const auto [ny, ey] = p_norm(y, g, q, opt);
  TwoSided out;
  out.lhs = l.value;
  out.rhs = nx * ny;
  out.bound = l.error_bound + ex * ny + ey * nx + ex * ey + 8.0 * kEps * (std::abs(out.lhs) + std::abs(out.rhs));
  return out;
}

TwoSided minkowski_check(const RepFunc& x, const RepFunc& y, const RepFunc& g, double p, const Options& opt) {
  check_pair(g, p);
  const auto [ns, es] = p_norm(add(x, y), g, p, opt);
  const auto [nx, ex] = p_norm(x, g, p, opt);
  const auto [ny, ey] = p_norm(y, g, p, opt);
  TwoSided out;
  out.lhs = ns;
  out.rhs = nx + ny;
  out.bound = es + ex + ey + 8.0 * kEps * (std::abs(out.lhs) + std::abs(out.rhs));
  return out;
}

NormWitness functional_norm_witness(const RepFunc& g, double eps, const Options& opt) {
  if (!(eps > 0.0)) fail(ErrorKind::Domain, "eps must be positive");
  if (std::abs(g(g.a())) > 1e-12 * (1.0 + sup_abs(g))) fail(ErrorKind::Domain, "the functional needs g(a) = 0");
  const VariationResult v = total_variation(g, opt);
  if (v.infinite_suspected || !std::isfinite(v.value)) fail(ErrorKind::InfiniteVariation, "g has infinite variation");
  const auto [gt, dropped] = truncate_series(g, 0.25 * eps);
  std::vector<double> tau{g.a(), g.b()};
  for (const auto& piece : gt.pieces()) {
    const MonotoneCuts m = monotone_cuts(piece.expr, piece.u, piece.v);
    tau.insert(tau.end(), m.cuts.begin(), m.cuts.end());
  }
  for (const auto& s : gt.special_points())
    if (discontinuous_at(gt, s.value())) tau.push_back(s.value());
  std::sort(tau.begin(), tau.end());
  tau.erase(std::unique(tau.begin(), tau.end()), tau.end());

  std::vector<Cell> cells;
  for (std::size_t k = 1; k < tau.size(); ++k) {
    const double inc = gt.continuous_at(tau[k]) - gt.continuous_at(tau[k - 1]);
    cells.push_back({tau[k - 1], tau[k], Expr::constant(sign(inc))});
  }
  const std::vector<const RepFunc*> sources{&g, &gt};
  std::vector<std::pair<Location, double>> values;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double t = tau[k];
    double x;
    if (discontinuous_at(gt, t)) {
      const auto [sm, sp] = side_jumps(gt, t);
      x = sign(sm + sp);
    } else {
      x = cells[k < cells.size() ? k : k - 1].expr.constant_value();
    }
    values.emplace_back(location_for(t, sources), x);
  }
  RepFunc witness = from_cells(g.a(), g.b(), cells, values);
  const StarResult s = star_integral(witness, g, opt);
  return {s.value, s.error_bound, v.value, std::move(witness), std::move(tau)};
}

}  // namespace saltus
