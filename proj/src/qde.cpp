#include "saltus/qde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include <boost/numeric/odeint.hpp>

#include "saltus/errors.hpp"
#include "saltus/mollify.hpp"
#include "saltus/quadrature.hpp"
#include "saltus/star_engine.hpp"

namespace saltus {

namespace {

constexpr int kGridCells = 2048;

bool is_zero_function(const RepFunc& f) {
  return f.c0() == 0.0 && f.pieces().empty() && f.jumps().empty() && f.overrides().empty() && !f.series();
}

bool is_continuous_function(const RepFunc& f) { return f.jumps().empty() && f.overrides().empty() && !f.series(); }

// Uniform grid merged with fixed points; grid nodes too close to a fixed
// point are dropped.
std::vector<double> union_grid(double a, double b, std::vector<double> fixed) {
  fixed.push_back(a);
  fixed.push_back(b);
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
  const double gap = 1e-9 * (b - a);
  std::vector<double> out = fixed;
  for (int i = 1; i < kGridCells; ++i) {
    const double t = a + (b - a) * i / kGridCells;
    const auto it = std::lower_bound(fixed.begin(), fixed.end(), t);
    const bool near = (it != fixed.end() && *it - t < gap) || (it != fixed.begin() && t - *(it - 1) < gap);
    if (!near) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Expr hermite(double u, double v, double f0, double f1, double d0, double d1) {
  const double h = v - u;
  const double s = (f1 - f0) / h;
  const double c2 = (3.0 * s - 2.0 * d0 - d1) / h;
  const double c3 = (d0 + d1 - 2.0 * s) / (h * h);
  if (d0 == 0.0 && c2 == 0.0 && c3 == 0.0) return Expr::constant(f0);
  return Expr::affine(1.0, -u, Expr::poly({f0, d0, c2, c3}));
}

std::vector<std::pair<Location, double>> special_values(const RepFunc& f) {
  const std::vector<const RepFunc*> fs{&f};
  std::vector<std::pair<Location, double>> out;
  for (const auto& s : f.special_points()) out.emplace_back(location_for(s.value(), fs), f(s.value()));
  return out;
}

// Cubic Hermite interpolant of f on the grid, jumps and point values kept.
RepFunc tabulate(const RepFunc& f, const std::vector<double>& grid) {
  const std::vector<const RepFunc*> fs{&f};
  const auto pts = merged_points(fs, grid);
  std::vector<Cell> cells;
  for (const auto& c : cells_of(f, pts)) {
    if (c.expr.is_constant()) {
      cells.push_back(c);
      continue;
    }
    cells.push_back({c.u, c.v,
                     hermite(c.u, c.v, c.expr(c.u), c.expr(c.v), c.expr.derivative_at(c.u), c.expr.derivative_at(c.v))});
  }
  return from_cells(f.a(), f.b(), cells, special_values(f));
}

// t -> int_a^t num/den (or its exponential), tabulated on the grid from
// cumulative cell quadrature. den may be null.
RepFunc tabulate_running(const RepFunc& num, const RepFunc* den, const RepFunc* factor, const std::vector<double>& grid,
                         bool exponentiate, const Options& opt) {
  std::vector<const RepFunc*> fs{&num};
  if (den) fs.push_back(den);
  if (factor) fs.push_back(factor);
  const auto pts = merged_points(fs, grid);
  const auto cn = cells_of(num, pts);
  std::vector<Cell> cd;
  std::vector<Cell> cf;
  if (den) cd = cells_of(*den, pts);
  if (factor) cf = cells_of(*factor, pts);
  const double a = num.a();
  const double b = num.b();
  std::vector<Cell> cells;
  double acc = 0.0;
  for (std::size_t i = 0; i < cn.size(); ++i) {
    const double u = cn[i].u;
    const double v = cn[i].v;
    Expr e = cn[i].expr;
    if (den) e = e * Expr::recip(cd[i].expr);
    if (factor) e = e * cf[i].expr;
    const double m = integrate(e, u, v, opt.tol * (v - u) / (b - a), opt.max_depth).value();
    const double i0 = acc;
    const double i1 = acc + m;
    acc = i1;
    if (exponentiate) {
      const double f0 = std::exp(i0);
      const double f1 = std::exp(i1);
      cells.push_back({u, v, hermite(u, v, f0, f1, f0 * e(u), f1 * e(v))});
    } else {
      cells.push_back({u, v, hermite(u, v, i0, i1, e(u), e(v))});
    }
  }
  return from_cells(a, b, cells, {});
}

// P from H by the elimination recursion. h(i, k) is 1-based with
// h(n+1, n+1) = h(n, n); the result is 0-based, row k holding p_k0..p_kk.
template <typename T, typename Div>
std::vector<std::vector<T>> p_recursion(int n, const std::function<T(int, int)>& h, const T& zero, const T& one,
                                        Div div) {
  std::vector<std::vector<T>> p(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) p[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(k + 1), zero);
  auto P = [&](int i, int k) -> T& { return p[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]; };
  P(0, 0) = one;
  for (int k = 1; k <= n; ++k) P(k, k) = div(h(k + 1, k + 1), h(k, k));
  P(1, 0) = h(2, 1);
  for (int k = 2; k <= n; ++k) {
    std::vector<T> bcoef(static_cast<std::size_t>(k + 1), zero);
    for (int i = 1; i < k; ++i) bcoef[static_cast<std::size_t>(i)] = zero - h(k, k - i);
    for (int j = 1; j <= k; ++j) {
      const T bj = bcoef[static_cast<std::size_t>(j)];
      const T piv = h(k - j + 1, k - j + 1);
      for (int i = j + 1; i <= k; ++i)
        bcoef[static_cast<std::size_t>(i)] = bcoef[static_cast<std::size_t>(i)] - div(bj * h(k - j + 1, k - i + 1), piv);
      bcoef[static_cast<std::size_t>(j)] = div(bj, piv);
      P(k, k - j) = P(k, k) * bcoef[static_cast<std::size_t>(j)];
    }
  }
  return p;
}

// A from P by the stencil, 0-based n x n.
template <typename T, typename Div>
std::vector<std::vector<T>> a_stencil(int n, const std::function<T(int, int)>& p, const T& zero, const T& one,
                                      Div div) {
  std::vector<std::vector<T>> A(static_cast<std::size_t>(n), std::vector<T>(static_cast<std::size_t>(n), zero));
  for (int i = 1; i <= n; ++i) {
    if (i < n) A[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(i)] = div(one, p(i, i));
    for (int j = 1; j <= i; ++j)
      A[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] = zero - div(p(i, j - 1), p(i, i));
  }
  return A;
}

Expr expr_div(const Expr& x, const Expr& y) {
  if (x.is_zero()) return Expr();
  return x * Expr::recip(y);
}
double num_div(double x, double y) { return x / y; }

double side_value(const RepFunc& f, double t, int side) {
  if (side == 0) return f(t);
  const PointInfo info = f.limits(t);
  return side < 0 ? info.left_limit : info.right_limit;
}

// Applies a cellwise map to a list of functions: cells on the merged
// points, values at the special points from the same map on doubles.
template <typename ExprMap, typename ValueMap>
std::vector<RepFunc> map_functions(const std::vector<const RepFunc*>& in, std::size_t outputs, ExprMap emap,
                                   ValueMap vmap) {
  const double a = in.front()->a();
  const double b = in.front()->b();
  const auto pts = merged_points(in);
  std::vector<std::vector<Cell>> cin;
  for (const auto* f : in) cin.push_back(cells_of(*f, pts));
  std::vector<std::vector<Cell>> cout(outputs);
  for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
    std::vector<Expr> es;
    for (const auto& ci : cin) es.push_back(ci[c].expr);
    const std::vector<Expr> r = emap(es);
    for (std::size_t o = 0; o < outputs; ++o) cout[o].push_back({pts[c], pts[c + 1], r[o]});
  }
  std::vector<double> specials;
  for (const auto* f : in)
    for (const auto& s : f->special_points()) specials.push_back(s.value());
  std::sort(specials.begin(), specials.end());
  specials.erase(std::unique(specials.begin(), specials.end()), specials.end());
  std::vector<std::vector<std::pair<Location, double>>> values(outputs);
  for (double t : specials) {
    std::vector<double> vs;
    for (const auto* f : in) vs.push_back((*f)(t));
    const std::vector<double> r = vmap(vs);
    const Location loc = location_for(t, in);
    for (std::size_t o = 0; o < outputs; ++o) values[o].emplace_back(loc, r[o]);
  }
  std::vector<RepFunc> out;
  for (std::size_t o = 0; o < outputs; ++o) out.push_back(from_cells(a, b, cout[o], values[o]));
  return out;
}

std::vector<double> coefficient_points(const CoefficientSet& c) {
  std::vector<const RepFunc*> fs;
  for (const auto& p : c.p) fs.push_back(&p);
  return merged_points(fs);
}

}  // namespace

const char* to_string(ConditionClass c) noexcept {
  switch (c) {
    case ConditionClass::A: return "A";
    case ConditionClass::C: return "C";
    case ConditionClass::CDelta: return "C_delta";
    case ConditionClass::D: return "D";
  }
  return "?";
}

CoefficientSet make_coefficients(std::vector<RepFunc> p) {
  if (p.size() < 3) fail(ErrorKind::Domain, "need p_1 .. p_{n+1} with n >= 2");
  for (std::size_t k = 1; k < p.size(); ++k) require_same_domain(p.front(), p[k]);
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k].series())
      fail(ErrorKind::UnsupportedSeries, "coefficient p_" + std::to_string(k + 1) + " has a jump series");
  CoefficientSet c;
  c.n = static_cast<int>(p.size()) - 1;
  bool all_continuous = true;
  bool rest_continuous = true;
  for (std::size_t k = 0; k < p.size(); ++k) {
    all_continuous = all_continuous && is_continuous_function(p[k]);
    if (k > 0) rest_continuous = rest_continuous && is_continuous_function(p[k]);
  }
  if (all_continuous) {
    c.condition_class = ConditionClass::A;
  } else if (p.front().overrides().empty()) {
    c.condition_class = ConditionClass::CDelta;
  } else {
    c.condition_class = rest_continuous ? ConditionClass::D : ConditionClass::C;
  }
  c.p = std::move(p);
  return c;
}

TriMatrix::TriMatrix(int lo, int hi, double a, double b) : lo_(lo), hi_(hi) {
  const int m = hi - lo + 1;
  entries_.assign(static_cast<std::size_t>(m * (m + 1) / 2), RepFunc::constant(a, b, 0.0));
  zero_.push_back(RepFunc::constant(a, b, 0.0));
}

std::size_t TriMatrix::index(int i, int k) const {
  const int r = i - lo_;
  return static_cast<std::size_t>(r * (r + 1) / 2 + (k - lo_));
}

const RepFunc& TriMatrix::operator()(int i, int k) const {
  if (i < lo_ || i > hi_ || k < lo_ || k > hi_) fail(ErrorKind::Domain, "matrix index out of range");
  if (k > i) return zero_.front();
  return entries_[index(i, k)];
}

RepFunc& TriMatrix::at(int i, int k) {
  if (i < lo_ || i > hi_ || k < lo_ || k > i) fail(ErrorKind::Domain, "matrix index out of range");
  return entries_[index(i, k)];
}

std::vector<std::vector<double>> TriMatrix::values(double t, int side) const {
  const int m = hi_ - lo_ + 1;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (int i = lo_; i <= hi_; ++i)
    for (int k = lo_; k <= i; ++k)
      out[static_cast<std::size_t>(i - lo_)][static_cast<std::size_t>(k - lo_)] = side_value((*this)(i, k), t, side);
  return out;
}

HMatrix build_H(const CoefficientSet& coeffs, const Options& opt) {
  const int n = coeffs.n;
  const RepFunc& p1 = coeffs.p.front();
  const double a = p1.a();
  const double b = p1.b();
  HMatrix H;
  H.n = n;
  H.grid = union_grid(a, b, coefficient_points(coeffs));
  H.h = TriMatrix(1, n, a, b);
  H.h.at(1, 1) = RepFunc::constant(a, b, 1.0);

  const double p1a = p1(a);
  const std::vector<const RepFunc*> f1{&p1};
  std::vector<Cell> ecells;
  for (const auto& c : cells_of(p1, merged_points(f1, H.grid))) ecells.push_back({c.u, c.v, Expr::exp_of(c.expr + (-p1a))});
  std::vector<std::pair<Location, double>> evals;
  for (const auto& s : p1.special_points()) evals.emplace_back(location_for(s.value(), f1), std::exp(p1(s.value()) - p1a));
  const RepFunc hnn = tabulate(from_cells(a, b, ecells, evals), H.grid);
  H.h.at(n, n) = hnn;
  for (int k = 2; k <= n; ++k)
    H.h.at(n, n - k + 1) = tabulate(star_indefinite(hnn, coeffs.p[static_cast<std::size_t>(k - 1)], opt).phi, H.grid);

  for (int k = n - 1; k >= 2; --k) {
    const RepFunc& below = H.h(k + 1, k + 1);
    H.h.at(k, k) = tabulate_running(H.h(k + 1, k), &below, nullptr, H.grid, true, opt);
    for (int i = 2; i <= k; ++i) {
      const int col = k - i + 1;
      H.h.at(k, col) = tabulate_running(H.h(k + 1, col), &below, &H.h(k, k), H.grid, false, opt);
    }
  }
  return H;
}

TriMatrix build_P(const HMatrix& H) {
  const int n = H.n;
  const double a = H.h(1, 1).a();
  const double b = H.h(1, 1).b();
  for (int k = 1; k <= n; ++k)
    for (double t : H.grid)
      if (!(H.h(k, k)(t) > 0.0)) fail(ErrorKind::SingularPivot, "h_" + std::to_string(k) + std::to_string(k) + " is not positive");

  std::vector<const RepFunc*> in;
  std::vector<std::pair<int, int>> where;
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= i; ++k) {
      in.push_back(&H.h(i, k));
      where.emplace_back(i, k);
    }
  const std::size_t outputs = static_cast<std::size_t>((n + 1) * (n + 2) / 2);
  auto lookup = [&](int i, int k) -> std::size_t {
    if (i == n + 1) i = n;
    if (k == n + 1) k = n;
    for (std::size_t q = 0; q < where.size(); ++q)
      if (where[q] == std::make_pair(i, k)) return q;
    return where.size();
  };
  auto flatten = [&](const auto& p) {
    std::vector<std::decay_t<decltype(p[0][0])>> out;
    for (const auto& row : p)
      for (const auto& e : row) out.push_back(e);
    return out;
  };
  auto emap = [&](const std::vector<Expr>& es) {
    const std::function<Expr(int, int)> h = [&](int i, int k) {
      const std::size_t q = lookup(i, k);
      return q < es.size() ? es[q] : Expr();
    };
    return flatten(p_recursion<Expr>(n, h, Expr(), Expr::constant(1.0), expr_div));
  };
  auto vmap = [&](const std::vector<double>& vs) {
    const std::function<double(int, int)> h = [&](int i, int k) {
      const std::size_t q = lookup(i, k);
      return q < vs.size() ? vs[q] : 0.0;
    };
    return flatten(p_recursion<double>(n, h, 0.0, 1.0, num_div));
  };
  const std::vector<RepFunc> flat = map_functions(in, outputs, emap, vmap);
  TriMatrix P(0, n, a, b);
  std::size_t q = 0;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= i; ++k) P.at(i, k) = flat[q++];
  return P;
}

double p_residual(const HMatrix& H, const TriMatrix& P, int samples) {
  const int n = H.n;
  const double a = H.h(1, 1).a();
  const double b = H.h(1, 1).b();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = a + (b - a) * (s + 0.5) / samples;
    auto h = [&](int i, int k) { return H.h(std::min(i, n), std::min(k, n))(t); };
    auto p = [&](int i, int k) { return P(i, k)(t); };
    for (int k = 2; k <= n; ++k) {
      double r0 = 0.0;
      for (int v = 0; v < k; ++v) r0 += p(k, v) * h(v + 1, 1);
      worst = std::max(worst, std::abs(r0));
      for (int j = 1; j < k; ++j) {
        double r = p(k, k) * h(k, j);
        for (int v = 0; v < k; ++v) r += p(k, v) * (j + 1 <= v + 1 ? h(v + 1, j + 1) : 0.0);
        worst = std::max(worst, std::abs(r));
      }
    }
  }
  return worst;
}

QdeSystem assemble_system(const CoefficientSet& coeffs, const HMatrix& H, const TriMatrix& P,
                          const std::vector<double>& gamma, const Options& opt) {
  const int n = coeffs.n;
  if (static_cast<int>(gamma.size()) != n) fail(ErrorKind::Domain, "gamma must have n entries");
  QdeSystem s;
  s.n = n;
  s.a = coeffs.p.front().a();
  s.b = coeffs.p.front().b();
  s.H = H;
  s.P = P;

  std::vector<const RepFunc*> in;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= i; ++k) in.push_back(&P(i, k));
  auto idx = [](int i, int k) { return static_cast<std::size_t>(i * (i + 1) / 2 + k); };
  auto flatten = [](const auto& m) {
    std::vector<std::decay_t<decltype(m[0][0])>> out;
    for (const auto& row : m)
      for (const auto& e : row) out.push_back(e);
    return out;
  };
  auto emap = [&](const std::vector<Expr>& es) {
    const std::function<Expr(int, int)> p = [&](int i, int k) { return es[idx(i, k)]; };
    return flatten(a_stencil<Expr>(n, p, Expr(), Expr::constant(1.0), expr_div));
  };
  auto vmap = [&](const std::vector<double>& vs) {
    const std::function<double(int, int)> p = [&](int i, int k) { return vs[idx(i, k)]; };
    return flatten(a_stencil<double>(n, p, 0.0, 1.0, num_div));
  };
  const std::vector<RepFunc> flat = map_functions(in, static_cast<std::size_t>(n * n), emap, vmap);
  s.A.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.A[static_cast<std::size_t>(i)].push_back(flat[static_cast<std::size_t>(i * n + j)]);

  const RepFunc zero = RepFunc::constant(s.a, s.b, 0.0);
  const RepFunc hn0 = tabulate(star_indefinite(H.h(n, n), coeffs.p.back(), opt).phi, H.grid);
  s.h0.assign(static_cast<std::size_t>(n), zero);
  s.h0.back() = hn0;
  for (int i = 0; i < n; ++i) s.F.push_back(is_zero_function(hn0) ? zero : mul(s.A[static_cast<std::size_t>(i)].back(), hn0));

  const auto Ha = H.h.values(s.a, 0);
  s.xi.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k <= i; ++k)
      s.xi[static_cast<std::size_t>(i)] += Ha[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * gamma[static_cast<std::size_t>(k)];

  for (const auto& p : coeffs.p) {
    for (const auto& sp : p.special_points()) {
      const double t = sp.value();
      if (t > s.a && t < s.b) s.events.push_back(t);
    }
  }
  std::sort(s.events.begin(), s.events.end());
  s.events.erase(std::unique(s.events.begin(), s.events.end()), s.events.end());
  s.restarts = coefficient_points(coeffs);
  return s;
}

QdeSystem build_system(const CoefficientSet& coeffs, const std::vector<double>& gamma, const Options& opt) {
  const HMatrix H = build_H(coeffs, opt);
  const TriMatrix P = build_P(H);
  return assemble_system(coeffs, H, P, gamma, opt);
}

std::vector<double> recover(const QdeSystem& sys, double t, int side, const std::vector<double>& y) {
  const int n = sys.n;
  const auto H = sys.H.h.values(t, side);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double r = y[ui] + side_value(sys.h0[ui], t, side);
    for (int k = 0; k < i; ++k) r -= H[ui][static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    if (!(H[ui][ui] > 0.0)) fail(ErrorKind::SingularPivot, "H has a non-positive diagonal entry");
    x[ui] = r / H[ui][ui];
  }
  return x;
}

long Trajectory::find(double t, int s) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  for (auto i = static_cast<std::size_t>(it - grid.begin()); i < grid.size() && grid[i] == t; ++i)
    if (side[i] == s) return static_cast<long>(i);
  return -1;
}

void Trajectory::write_csv(std::ostream& os) const {
  const std::size_t n = y.empty() ? 0 : y.front().size();
  os << "t,side";
  for (std::size_t i = 1; i <= n; ++i) os << ",y" << i;
  os << ",x";
  for (std::size_t i = 1; i < n; ++i) os << ",x" << i;
  os << "\n";
  os.precision(17);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    os << grid[r] << "," << (side[r] < 0 ? "-" : side[r] > 0 ? "+" : "");
    for (double v : y[r]) os << "," << v;
    for (double v : x_derivs[r]) os << "," << v;
    os << "\n";
  }
}

namespace {

using State = std::vector<double>;

struct Rhs {
  const QdeSystem* sys;
  double s0;
  double s1;
  void operator()(const State& y, State& dy, double t) const {
    const double tt = std::clamp(t, s0, s1);
    const int side = tt <= s0 ? 1 : tt >= s1 ? -1 : 0;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
      double d = side_value(sys->F[i], tt, side);
      for (std::size_t j = 0; j < n; ++j) d += side_value(sys->A[i][j], tt, side) * y[j];
      dy[i] = d;
    }
  }
};

}  // namespace

Trajectory solve_cauchy(const QdeSystem& sys, double tol, const std::vector<double>& times) {
  namespace ode = boost::numeric::odeint;
  if (!(tol > 0.0)) fail(ErrorKind::Domain, "tol must be positive");
  Trajectory tr;
  tr.events = sys.events;
  auto push = [&](double t, int side, const State& y) {
    tr.grid.push_back(t);
    tr.side.push_back(side);
    tr.y.push_back(y);
    tr.x_derivs.push_back(recover(sys, t, side, y));
  };
  auto is_event = [&](double t) { return std::binary_search(sys.events.begin(), sys.events.end(), t); };

  std::vector<double> req = times;
  std::sort(req.begin(), req.end());
  State y = sys.xi;
  push(sys.a, 0, y);
  const double span = sys.b - sys.a;
  for (std::size_t k = 0; k + 1 < sys.restarts.size(); ++k) {
    const double s0 = sys.restarts[k];
    const double s1 = sys.restarts[k + 1];
    if (!(s1 > s0)) continue;
    if (is_event(s0)) push(s0, 1, y);
    const Rhs rhs{&sys, s0, s1};
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State>());
    const double dt = std::min(s1 - s0, span / 64.0);
    const double end_gap = 1e-13 * span;
    auto obs = [&](const State& ys, double t) {
      if (t > s0 && t < s1 - end_gap) push(t, 0, ys);
    };
    try {
      if (req.empty()) {
        tr.steps += static_cast<long>(ode::integrate_adaptive(stepper, rhs, y, s0, s1, dt, obs));
      } else {
        std::vector<double> ts{s0};
        for (auto it = std::upper_bound(req.begin(), req.end(), s0); it != req.end() && *it < s1; ++it) ts.push_back(*it);
        ts.push_back(s1);
        tr.steps += static_cast<long>(ode::integrate_times(stepper, rhs, y, ts.begin(), ts.end(), dt, obs));
      }
    } catch (const ode::odeint_error& e) {
      fail(ErrorKind::StepFailure, std::string("integrator failed: ") + e.what());
    }
    for (double v : y)
      if (!std::isfinite(v)) fail(ErrorKind::StepFailure, "solution is not finite");
    push(s1, is_event(s1) ? -1 : 0, y);
  }
  return tr;
}

DeltaReport delta_correctness(const CoefficientSet& coeffs, const std::vector<double>& gamma,
                              const std::vector<double>& eps_grid, double tol, int samples, const Options& opt) {
  if (coeffs.condition_class != ConditionClass::A && coeffs.condition_class != ConditionClass::CDelta)
    fail(ErrorKind::ConditionViolation,
         std::string("delta-correctness needs condition C_delta; the coefficients satisfy ") +
             to_string(coeffs.condition_class) + " (p_1 has overrides)");
  if (eps_grid.empty()) fail(ErrorKind::Domain, "eps grid is empty");
  if (samples < 2) fail(ErrorKind::Domain, "need at least two samples");
  const QdeSystem ref_sys = build_system(coeffs, gamma, opt);
  const double a = ref_sys.a;
  const double b = ref_sys.b;
  std::vector<double> times;
  for (int i = 0; i < samples; ++i) times.push_back(a + (b - a) * i / (samples - 1));
  const Trajectory ref = solve_cauchy(ref_sys, tol, times);

  DeltaReport rep;
  rep.events = ref_sys.events;
  for (double eps : eps_grid) {
    std::vector<RepFunc> pe;
    for (const auto& p : coeffs.p) pe.push_back(mollify(p, eps, opt));
    const QdeSystem sys = build_system(make_coefficients(std::move(pe)), gamma, opt);
    const Trajectory tr = solve_cauchy(sys, tol, times);
    DeltaRow row;
    row.eps = eps;
    for (double t : times) {
      bool skip = false;
      for (double e : rep.events) skip = skip || std::abs(t - e) <= eps;
      if (skip) continue;
      const long i = tr.find(t);
      const long j = ref.find(t);
      if (i < 0 || j < 0) continue;
      for (std::size_t c = 0; c < gamma.size(); ++c) {
        const double d = std::abs(tr.x_derivs[static_cast<std::size_t>(i)][c] - ref.x_derivs[static_cast<std::size_t>(j)][c]);
        if (d > row.deviation) {
          row.deviation = d;
          row.argmax = t;
        }
      }
    }
    rep.rows.push_back(row);
  }
  return rep;
}

OdeProblem parse_ode_problem(const nlohmann::json& doc) {
  auto schema = [](const std::string& ptr, const std::string& what) { throw DocumentError(ErrorKind::Schema, ptr, what); };
  if (!doc.is_object()) schema("", "ODE problem must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "n" && key != "domain" && key != "p" && key != "gamma" && key != "tol") schema("/" + key, "unknown field");
  if (!doc.contains("n") || !doc.at("n").is_number_integer()) schema("/n", "n must be an integer");
  const int n = doc.at("n").get<int>();
  if (n < 2) schema("/n", "n must be at least 2");
  if (!doc.contains("domain") || !doc.at("domain").is_array() || doc.at("domain").size() != 2 ||
      !doc.at("domain")[0].is_number() || !doc.at("domain")[1].is_number())
    schema("/domain", "domain must be [a, b]");
  const double a = doc.at("domain")[0].get<double>();
  const double b = doc.at("domain")[1].get<double>();
  if (!doc.contains("p") || !doc.at("p").is_array()) schema("/p", "p must be an array");
  if (static_cast<int>(doc.at("p").size()) != n + 1) schema("/p", "p must hold n + 1 functions");
  std::vector<RepFunc> p;
  for (std::size_t k = 0; k < doc.at("p").size(); ++k) {
    const std::string ptr = "/p/" + std::to_string(k);
    try {
      p.push_back(make_func(doc.at("p")[k]));
    } catch (const DocumentError& e) {
      throw DocumentError(e.kind(), ptr + e.pointer(), std::string("invalid coefficient (") + e.what() + ")");
    }
    if (p.back().a() != a || p.back().b() != b)
      throw DocumentError(ErrorKind::DomainMismatch, ptr + "/domain", "coefficient domain differs from the problem domain");
  }
  if (!doc.contains("gamma") || !doc.at("gamma").is_array() || static_cast<int>(doc.at("gamma").size()) != n)
    schema("/gamma", "gamma must hold n reals");
  OdeProblem out;
  for (std::size_t k = 0; k < doc.at("gamma").size(); ++k) {
    if (!doc.at("gamma")[k].is_number()) schema("/gamma/" + std::to_string(k), "expected a number");
    out.gamma.push_back(doc.at("gamma")[k].get<double>());
  }
  if (doc.contains("tol")) {
    if (!doc.at("tol").is_number() || !(doc.at("tol").get<double>() > 0.0)) schema("/tol", "tol must be positive");
    out.tol = doc.at("tol").get<double>();
  }
  out.coeffs = make_coefficients(std::move(p));
  return out;
}

}  // namespace saltus
