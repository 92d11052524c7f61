#include "saltus/rs_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saltus/errors.hpp"
#include "saltus/quadrature.hpp"

namespace saltus {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

TaggedPartition TaggedPartition::midpoints(const Partition& p) {
  TaggedPartition tp{p, {}};
  for (std::size_t i = 1; i < p.points.size(); ++i) tp.tags.push_back(0.5 * (p.points[i - 1] + p.points[i]));
  return tp;
}

void TaggedPartition::check(double a, double b) const {
  partition.check(a, b);
  if (tags.size() + 1 != partition.points.size()) fail(ErrorKind::Domain, "one tag per cell is required");
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (!(tags[i] >= partition.points[i] && tags[i] <= partition.points[i + 1]))
      fail(ErrorKind::Domain, "tag outside its cell");
}

double stieltjes_sum(const RepFunc& f, const RepFunc& g, const TaggedPartition& tp) {
  require_same_domain(f, g);
  tp.check(f.a(), f.b());
  const auto& t = tp.partition.points;
  double s = 0.0;
  double prev = g(t[0]);
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double cur = g(t[k]);
    s += f(tp.tags[k - 1]) * (cur - prev);
    prev = cur;
  }
  return s;
}

std::pair<double, double> darboux_bounds(const RepFunc& f, const RepFunc& g, const Partition& p) {
  require_same_domain(f, g);
  p.check(f.a(), f.b());
  if (!is_increasing(g)) fail(ErrorKind::NotIncreasing, "Darboux sums need an increasing integrator");
  double lo = 0.0;
  double hi = 0.0;
  const auto& t = p.points;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double dg = std::max(0.0, g(t[k]) - g(t[k - 1]));
    if (dg == 0.0) continue;
    const Interval r = range(f, t[k - 1], t[k]);
    lo += (Interval(r.lo) * Interval(dg)).lo;
    hi += (Interval(r.hi) * Interval(dg)).hi;
  }
  return {lo, hi};
}

const char* to_string(Existence e) {
  switch (e) {
    case Existence::Ok: return "OK";
    case Existence::CommonDiscontinuity: return "CommonDiscontinuity";
    case Existence::MeasureFail: return "MeasureFail";
  }
  return "?";
}

const char* to_string(EnclosureStatus s) {
  switch (s) {
    case EnclosureStatus::Certified: return "CERTIFIED";
    case EnclosureStatus::Nonexistent: return "NONEXISTENT";
    case EnclosureStatus::Budget: return "BUDGET";
  }
  return "?";
}

namespace {

struct Finding {
  double t;
  Existence kind;
  std::string loc;
};

// Generated series locations while they stay distinct in binary64.
std::vector<double> series_points(const RepFunc& f) {
  std::vector<double> out;
  if (!f.series()) return out;
  const auto& s = *f.series();
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (long k = 0; k < (1L << 16); ++k) {
    const double t = s.location(k, f.a(), f.b());
    if (t == prev || t <= f.a() || t >= f.b()) break;
    if (s.magnitude(k) != 0.0) out.push_back(t);
    prev = t;
    if (s.tail_bound(k) == 0.0) break;
  }
  return out;
}

void scan(const RepFunc& f, const RepFunc& g, std::vector<Finding>& out) {
  for (const auto& p : f.special_points()) {
    const double t = p.value();
    if (!discontinuous_at(f, t) || !discontinuous_at(g, t)) continue;
    const bool finite = g.jump_at(t) || g.override_at(t);
    out.push_back({t, finite ? Existence::CommonDiscontinuity : Existence::MeasureFail, p.str()});
  }
  for (double t : series_points(f)) {
    if (discontinuous_at(g, t)) out.push_back({t, Existence::MeasureFail, Location::from_value(t).str()});
  }
}

}  // namespace

ExistenceCheck rs_exists_check(const RepFunc& f, const RepFunc& g) {
  require_same_domain(f, g);
  std::vector<Finding> found;
  scan(f, g, found);
  scan(g, f, found);
  if (found.empty()) return {};
  const auto it = std::min_element(found.begin(), found.end(), [](const Finding& x, const Finding& y) {
    if (x.t != y.t) return x.t < y.t;
    return static_cast<int>(x.kind) < static_cast<int>(y.kind);
  });
  return {it->kind, it->loc};
}

ContinuousIntegral integrate_continuous(const RepFunc& f, const RepFunc& g, double c, double d, const Options& opt) {
  ContinuousIntegral out;
  out.enclosure = Interval(0.0);
  if (!(d > c) || g.pieces().empty()) return out;
  const auto [ft, dropped] = truncate_series(f, opt.series_tol);
  std::vector<double> fpts;
  for (double t : merged_points({&ft}))
    if (t > c && t < d) fpts.push_back(t);
  double vgc = 0.0;
  for (const auto& piece : g.pieces()) {
    const double l = std::max(piece.u, c);
    const double r = std::min(piece.v, d);
    if (!(r > l)) continue;
    const Expr dg = piece.expr.derivative();
    if (dg.is_zero()) continue;
    vgc += (r - l) * dg.enclose(Interval(l, r)).mag();
    std::vector<double> pts{l};
    for (double t : fpts)
      if (t > l && t < r) pts.push_back(t);
    pts.push_back(r);
    for (const auto& cell : cells_of(ft, pts)) {
      const QuadResult q =
          integrate(cell.expr * dg, cell.u, cell.v, 0.5 * opt.tol * (cell.v - cell.u) / (d - c), opt.max_depth);
      out.enclosure += q.enclosure;
      out.depth = std::max(out.depth, q.depth);
      out.cells += q.cells;
    }
  }
  if (dropped > 0.0) {
    const double e = dropped * vgc;
    out.enclosure = Interval(out.enclosure.lo - e, out.enclosure.hi + e);
  }
  return out;
}

JumpTerms jump_terms(const RepFunc& f, const RepFunc& g, double c, double d, const Options& opt) {
  JumpTerms out;
  if (!(d > c)) return out;
  double mass = 0.0;
  out.left = f(c) * side_jumps(g, c).second;
  out.right = f(d) * side_jumps(g, d).first;
  mass += std::abs(out.left) + std::abs(out.right);
  for (const auto& j : g.jumps()) {
    const double t = j.loc.value();
    if (!(t > c && t < d)) continue;
    const double term = f(t) * j.sigma();
    out.interior += term;
    mass += std::abs(term);
  }
  if (g.series()) {
    const auto& s = *g.series();
    const double norm = std::max(1.0, sup_abs(f));
    const long n = s.terms_for(opt.series_tol / norm);
    double prev = std::numeric_limits<double>::quiet_NaN();
    long k = 0;
    for (; k <= n; ++k) {
      const double t = s.location(k, g.a(), g.b());
      if (t == prev) break;
      prev = t;
      if (!(t > c && t < d)) continue;
      const double term = f(t) * s.magnitude(k);
      out.interior += term;
      mass += std::abs(term);
      ++out.series_terms;
    }
    out.error += norm * s.tail_bound(k - 1);
  }
  out.error += 4.0 * kEps * mass;
  return out;
}

Enclosure rs_integral(const RepFunc& f, const RepFunc& g, const Options& opt) {
  require_same_domain(f, g);
  const ExistenceCheck chk = rs_exists_check(f, g);
  if (!chk.ok()) throw NonexistentError(to_string(chk.status), chk.loc);
  const ContinuousIntegral ci = integrate_continuous(f, g, f.a(), f.b(), opt);
  const JumpTerms jt = jump_terms(f, g, f.a(), f.b(), opt);
  const Interval v = ci.enclosure + Interval(jt.left) + Interval(jt.interior) + Interval(jt.right);
  Enclosure e;
  e.lo = v.lo - jt.error;
  e.hi = v.hi + jt.error;
  e.depth = ci.depth;
  e.status = e.hi - e.lo <= opt.tol ? EnclosureStatus::Certified : EnclosureStatus::Budget;
  return e;
}

Reduction rs_reduce(const RepFunc& f, const RepFunc& g, const Options& opt) {
  Options o = opt;
  o.tol = std::min(opt.tol, 1e-10);
  const Enclosure e = rs_integral(f, g, o);
  return {e.value(), e.error()};
}

ByParts rs_by_parts(const RepFunc& f, const RepFunc& g, const Options& opt) {
  const Enclosure x = rs_integral(f, g, opt);
  const Enclosure y = rs_integral(g, f, opt);
  ByParts r;
  r.lhs = x.value() + y.value();
  r.rhs = f(f.b()) * g(g.b()) - f(f.a()) * g(g.a());
  r.bound = x.error() + y.error() + 4.0 * kEps * (std::abs(r.lhs) + std::abs(r.rhs) + 1.0);
  return r;
}

}  // namespace saltus
