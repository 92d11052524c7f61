#include "saltus/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saltus/errors.hpp"

namespace saltus {

Partition Partition::uniform(double a, double b, int n) {
  if (n < 1) fail(ErrorKind::Domain, "partition needs at least one cell");
  Partition p;
  for (int k = 0; k <= n; ++k) p.points.push_back(k == n ? b : a + (b - a) * k / n);
  return p;
}

void Partition::check(double a, double b) const {
  if (points.size() < 2 || points.front() != a || points.back() != b)
    fail(ErrorKind::Domain, "partition must run from a to b");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1])) fail(ErrorKind::Domain, "partition points must be strictly increasing");
}

double partition_sum(const RepFunc& f, const Partition& p) {
  p.check(f.a(), f.b());
  return partition_sum(f, p.points);
}

MonotoneCuts monotone_cuts(const Expr& e, double u, double v) {
  MonotoneCuts m;
  m.cuts.push_back(u);
  if (!e.is_constant()) {
    const Expr d = e.derivative();
    if (!d.is_constant()) {
      const RootScan s = scan_roots(d, u, v);
      std::vector<double> pts = s.roots;
      for (const auto& [l, r] : s.uncertain) {
        pts.push_back(l);
        pts.push_back(r);
        const double len = r - l;
        m.slack += len * d.enclose(Interval(l, r)).mag();
      }
      std::sort(pts.begin(), pts.end());
      for (double t : pts)
        if (t > m.cuts.back() && t < v) m.cuts.push_back(t);
    }
  }
  m.cuts.push_back(v);
  return m;
}

namespace {

Interval at(const Expr& e, double t) { return e.enclose(Interval(t)); }

struct ContinuousVariation {
  Interval value{0.0};
  double slack = 0.0;
};

ContinuousVariation continuous_variation(const RepFunc& f) {
  ContinuousVariation out;
  for (const auto& p : f.pieces()) {
    const MonotoneCuts m = monotone_cuts(p.expr, p.u, p.v);
    for (std::size_t i = 1; i < m.cuts.size(); ++i) out.value += abs(at(p.expr, m.cuts[i]) - at(p.expr, m.cuts[i - 1]));
    out.slack += m.slack;
  }
  return out;
}

// Exact single-term closed form, else partial sum plus tail bound.
Interval series_variation(const JumpSeries& s, double tol) {
  if (s.terms().size() == 1) {
    const auto& t = s.terms()[0];
    const double v = std::abs(t.A) / (1.0 - std::abs(t.q));
    return detail::widen(v, v);
  }
  const long n = s.terms_for(tol);
  Interval sum(0.0);
  for (long k = 0; k <= n; ++k) sum += Interval(std::abs(s.magnitude(k)));
  return {sum.lo, sum.hi + s.tail_bound(n)};
}

}  // namespace

VariationResult total_variation(const RepFunc& f, const Options& opt) {
  VariationResult r;
  const ContinuousVariation c = continuous_variation(f);
  Interval d(0.0);
  for (const auto& j : f.jumps()) d += Interval(std::abs(j.left)) + Interval(std::abs(j.right));
  for (const auto& o : f.overrides()) d += Interval(2.0 * std::abs(o.value - f.core_at(o.loc.value())));
  if (f.series()) d += series_variation(*f.series(), 0.25 * opt.tol);
  r.continuous = c.value.mid();
  r.discrete = d.mid();
  r.value = r.continuous + r.discrete;
  const Interval total = c.value + d;
  r.enclosure = Interval(total.lo, total.hi + c.slack);
  r.enclosure.lo = std::min(r.enclosure.lo, r.value);
  r.enclosure.hi = std::max(r.enclosure.hi, r.value);
  if (!(r.enclosure.width() <= std::max(opt.tol, 1e-13 * std::max(1.0, r.value))))
    fail(ErrorKind::BudgetExceeded, "variation enclosure wider than the requested tolerance");
  return r;
}

VariationResult sampled_variation(const std::function<double(double)>& f, double a, double b,
                                  const SampledVariationOptions& opt) {
  VariationResult r;
  std::vector<double> values{f(a), f(b)};
  double prev = std::abs(values[1] - values[0]);
  std::vector<double> incs;
  r.value = prev;
  for (int level = 1; level <= opt.max_level; ++level) {
    const std::size_t n = std::size_t{1} << level;
    std::vector<double> next(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i % 2 == 0) {
        next[i] = values[i / 2];
      } else {
        next[i] = f(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
      }
    }
    values = std::move(next);
    double v = 0.0;
    for (std::size_t i = 1; i <= n; ++i) v += std::abs(values[i] - values[i - 1]);
    incs.push_back(v - prev);
    prev = v;
    r.value = v;
    r.levels = level;
    if (v > opt.divergence_budget) {
      r.infinite_suspected = true;
      break;
    }
  }
  r.enclosure = Interval(r.value, std::numeric_limits<double>::infinity());
  if (r.infinite_suspected) return r;
  // Ratios of the last increments decide between geometric convergence and
  // unbounded growth of the lower bounds.
  const std::size_t m = incs.size();
  const double floor = 1e-13 * std::max(1.0, r.value);
  if (m >= 4 && incs[m - 1] > floor) {
    double rho = 0.0;
    for (std::size_t i = m - 3; i < m; ++i) rho = std::max(rho, incs[i] / std::max(incs[i - 1], floor));
    if (rho >= 0.9) {
      r.infinite_suspected = true;
      return r;
    }
    const double tail = incs[m - 1] * rho / (1.0 - rho);
    if (r.value + tail > opt.divergence_budget) {
      r.infinite_suspected = true;
      return r;
    }
    r.enclosure.hi = r.value + tail;
    r.value += tail;
  } else {
    r.enclosure.hi = r.value;
  }
  return r;
}

std::pair<RepFunc, RepFunc> variation_function(const RepFunc& f0, const Options& opt) {
  RepFunc f = f0;
  std::optional<JumpSeries> series;
  if (f0.series()) {
    const auto& s = *f0.series();
    if (s.terms().size() == 1) {
      series = JumpSeries(s.side(), s.c(), s.r(), {{std::abs(s.terms()[0].A), std::abs(s.terms()[0].q)}});
    } else {
      f = truncate_series(f0, opt.series_tol).first;
    }
  }
  RepFunc::Parts p;
  double acc = 0.0;
  for (const auto& piece : f.pieces()) {
    const MonotoneCuts m = monotone_cuts(piece.expr, piece.u, piece.v);
    for (std::size_t i = 1; i < m.cuts.size(); ++i) {
      const double l = m.cuts[i - 1];
      const double r = m.cuts[i];
      const double el = piece.expr(l);
      const double er = piece.expr(r);
      const double s = er >= el ? 1.0 : -1.0;
      p.pieces.push_back({l, r, Expr::scale(s, piece.expr + (-el)) + acc});
      acc += std::abs(er - el);
    }
  }
  // Exact zero at a despite rounding inside the piece expressions.
  if (!p.pieces.empty()) p.c0 = -p.pieces.front().expr(f.a());
  for (const auto& j : f.jumps()) p.jumps.push_back({j.loc, std::abs(j.left), std::abs(j.right)});
  for (const auto& o : f.overrides()) {
    const double d = std::abs(o.value - f.core_at(o.loc.value()));
    if (d != 0.0) p.jumps.push_back({o.loc, d, d});
  }
  std::sort(p.jumps.begin(), p.jumps.end(), [](const JumpRecord& x, const JumpRecord& y) { return x.loc < y.loc; });
  p.series = series;
  RepFunc pi(f.a(), f.b(), std::move(p), 1e-9);
  RepFunc nu = subtract(pi, f);
  return {pi, nu};
}

bool is_increasing(const RepFunc& g, double tol) {
  const VariationResult v = total_variation(g);
  return v.enclosure.lo - (g(g.b()) - g(g.a())) <= tol * std::max(1.0, v.value);
}

double g_measure_open(const RepFunc& g, const std::vector<std::pair<double, double>>& intervals) {
  if (!is_increasing(g)) fail(ErrorKind::NotIncreasing, "g must be increasing");
  std::vector<std::pair<double, double>> iv = intervals;
  std::sort(iv.begin(), iv.end());
  double s = 0.0;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    const auto [l, r] = iv[i];
    if (!(l < r && l >= g.a() && r <= g.b())) fail(ErrorKind::Domain, "intervals must satisfy a <= a_k < b_k <= b");
    if (i > 0 && l < iv[i - 1].second) fail(ErrorKind::Domain, "intervals must be disjoint");
    s += g.limits(r).left_limit - g.limits(l).right_limit;
  }
  return s;
}

}  // namespace saltus
