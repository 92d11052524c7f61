#include "doctest.h"

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "saltus/errors.hpp"
#include "saltus/mollify.hpp"
#include "saltus/star_engine.hpp"
#include "saltus/variation.hpp"

using namespace saltus;

namespace {

double ramp(double t, double c, double eps) {
  if (t <= c) return 0.0;
  if (t >= c + eps) return 1.0;
  return (t - c) / eps;
}

/// Direct averages from the definition, with the constant extension.
double average_oracle(const RepFunc& y, double t, double eps) {
  const auto [yp, ym] = rl_split(y);
  auto ext = [&](const RepFunc& f) {
    return [&f](double s) { return f(std::clamp(s, f.a(), f.b())); };
  };
  auto fp = ext(yp);
  auto fm = ext(ym);
  std::vector<double> cuts;
  for (const auto& s : y.special_points()) cuts.push_back(s.value());
  for (double s : y.breakpoints()) cuts.push_back(s);
  auto piecewise = [&](const std::function<double(double)>& f, double l, double r) {
    std::vector<double> pts{l, r};
    for (double c : cuts)
      if (c > l && c < r) pts.push_back(c);
    std::sort(pts.begin(), pts.end());
    double s = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) s += oracle::gauss5(f, pts[i - 1], pts[i], 8);
    return s;
  };
  return (piecewise(fp, t, t + eps) + piecewise(fm, t - eps, t)) / eps;
}

RepFunc disjoint_pair_x() {
  return fx::with_jumps(fx::expr_func(0.0, 1.0, Expr::sin(0.5, 3.0, 0.2)),
                        {{fx::loc("0.3"), 0.4, -0.2}, {fx::loc("0.7"), 0.0, 1.0}});
}

RepFunc disjoint_pair_g() {
  return fx::with_jumps(fx::expr_func(0.0, 1.0, Expr::poly({0.0, 1.0, -0.5})),
                        {{fx::loc("0.5"), 0.3, 0.6}, {fx::loc("0.85"), -0.5, 0.0}});
}

}  // namespace

TEST_CASE("mollified unit function is a ramp") {
  const RepFunc h = fx::unit(0.0, 1.0, "0.5");
  for (double eps : {0.1, 0.05, 0.025, 0.0125, 0.003}) {
    const RepFunc m = mollify(h, eps);
    CHECK(m.is_continuous());
    double dev = 0.0;
    for (int k = 0; k <= 2000; ++k) {
      const double t = k / 2000.0;
      dev = std::max(dev, std::abs(m(t) - ramp(t, 0.5, eps)));
    }
    CHECK(dev <= 1e-10);
    CHECK(std::abs(total_variation(m).value - 1.0) <= 1e-12);
  }
  // A left jump mollifies into a forward ramp ending at the jump.
  const RepFunc m = mollify(fx::left_unit(0.0, 1.0, "0.5"), 0.1);
  for (double t : {0.3, 0.4, 0.42, 0.45, 0.5, 0.6})
    CHECK(std::abs(m(t) - ramp(t, 0.4, 0.1)) <= 1e-12);
}

TEST_CASE("mollify examples") {
  const RepFunc id = fx::identity(0.0, 1.0);
  const RepFunc m = mollify(id, 0.1);
  for (double t : {0.1, 0.35, 0.8, 1.0}) CHECK(std::abs(m(t) - (t - 0.05)) <= 1e-12);
  // Inside the boundary layer the extension by y(a) = 0 applies.
  CHECK(std::abs(m(0.04) - 0.04 * 0.04 / 0.2) <= 1e-12);
  const RepFunc k = mollify(RepFunc::constant(0.0, 1.0, 2.5), 0.2);
  for (double t : {0.0, 0.3, 1.0}) CHECK(std::abs(k(t) - 2.5) <= 1e-12);
  CHECK_THROWS_AS(mollify(id, 0.5), Error);
  try {
    mollify(id, 0.7);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EpsTooLarge);
  }
}

TEST_CASE("mollify against direct averages") {
  std::mt19937 rng(97);
  for (int i = 0; i < 20; ++i) {
    const RepFunc y = fx::random_func(rng, fx::random_tokens(rng, 3));
    for (double eps : {0.07, 0.02}) {
      const RepFunc m = mollify(y, eps);
      for (int k = 0; k <= 50; ++k) {
        const double t = k / 50.0;
        CHECK(std::abs(m(t) - average_oracle(y, t, eps)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("variation contraction and pointwise convergence") {
  std::mt19937 rng(101);
  for (int i = 0; i < 20; ++i) {
    const RepFunc y = fx::random_func(rng, fx::random_tokens(rng, 3));
    const double v = total_variation(y).value;
    std::vector<double> sample;
    for (int k = 0; k <= 400; ++k) {
      const double t = 0.1 + 0.8 * k / 400.0;
      bool near = false;
      for (const auto& s : y.special_points()) near = near || std::abs(t - s.value()) <= 0.1;
      if (!near) sample.push_back(t);
    }
    double prev = INFINITY;
    for (double eps = 0.1; eps > 1e-3; eps /= 2.0) {
      const RepFunc m = mollify(y, eps);
      CHECK(total_variation(m).value <= v + 1e-9);
      double d = 0.0;
      for (double t : sample) d = std::max(d, std::abs(m(t) - y(t)));
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
    CHECK(prev <= 1e-2);
  }
}

TEST_CASE("overrides and series are handled before averaging") {
  RepFunc::Parts p;
  p.c0 = 1.0;
  p.overrides.push_back({fx::loc("0.4"), 7.0});
  p.series = JumpSeries(JumpSeries::Side::Right, 0.25, 0.5, {{0.5, 0.5}});
  const RepFunc y(0.0, 1.0, std::move(p));
  const RepFunc m = mollify(y, 0.05);
  CHECK(std::abs(m(0.4) - 1.0) <= 1e-12);
  // The first series jump sits at 0.75; averages ending before it see only c0.
  CHECK(std::abs(m(0.7) - 1.0) <= 1e-12);
  CHECK(std::abs(m(0.775) - (1.0 + 0.5 * 0.5)) <= 1e-12);
  CHECK(total_variation(m).value <= 1.0 + 1e-12);
}

TEST_CASE("convergence report") {
  const std::vector<double> grid{0.1, 0.05, 0.025, 0.0125};
  const RepFunc xc = fx::expr_func(0.0, 1.0, Expr::cos(1.0, 2.0, 0.0));
  const RepFunc gc = fx::expr_func(0.0, 1.0, Expr::poly({0.0, 1.0, 1.0}));
  const MollifyReport c = mollify_convergence_report(xc, gc, grid);
  for (const auto& row : c.rows) CHECK(row.int_dev <= 2.0 * row.eps);

  const RepFunc x = disjoint_pair_x();
  const RepFunc g = disjoint_pair_g();
  const MollifyReport r = mollify_convergence_report(x, g, grid);
  CHECK(r.shared_limit == r.reference);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].int_dev < r.rows[i - 1].int_dev);
    CHECK(r.rows[i].var_dev <= r.rows[i - 1].var_dev + 1e-9);
    CHECK(r.rows[i].sup_dev <= r.rows[i - 1].sup_dev + 1e-12);
  }
  CHECK(r.rows.back().int_dev < 0.05);

  const RepFunc h = fx::unit(0.0, 1.0, "0.5");
  const MollifyReport u = mollify_convergence_report(RepFunc::constant(0.0, 1.0, 1.0), h, {0.1, 0.05, 0.025});
  for (const auto& row : u.rows) CHECK(row.var_dev <= 1e-12);

  CHECK_THROWS_AS(mollify_convergence_report(x, g, {0.05, 0.1}), Error);
}

TEST_CASE("shared jumps converge to the half-corrected limit") {
  const RepFunc h = fx::unit(0.0, 1.0, "0.5");
  const MollifyReport r = mollify_convergence_report(h, h, {0.1, 0.05, 0.025});
  CHECK(r.reference == 0.0);
  CHECK(r.shared_limit == 0.5);
  for (const auto& row : r.rows) CHECK(std::abs(row.integral - 0.5) <= 1e-9);

  // Two shared jumps with both one-sided parts present.
  const RepFunc x = fx::with_jumps(fx::expr_func(0.0, 1.0, Expr::poly({0.2, 0.5})),
                                   {{fx::loc("0.3"), 0.5, 1.0}, {fx::loc("0.6"), -1.0, 0.25}});
  const RepFunc g = fx::with_jumps(fx::identity(0.0, 1.0), {{fx::loc("0.3"), 2.0, -0.5}, {fx::loc("0.6"), 0.5, 1.5}});
  const MollifyReport s = mollify_convergence_report(x, g, {0.02, 0.01, 0.005, 0.0025, 0.00125});
  // sum of s+ s+ - s- s- = (1 (-0.5) - 0.5 * 2) + (0.25 * 1.5 + 1 * 0.5) = -0.625
  CHECK(std::abs(s.shared_limit - s.reference + 0.3125) <= 1e-12);
  double prev = INFINITY;
  for (const auto& row : s.rows) {
    const double d = std::abs(row.integral - s.shared_limit);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-2);
}
