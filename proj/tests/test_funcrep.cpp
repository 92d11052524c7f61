#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "saltus/errors.hpp"
#include "saltus/funcrep.hpp"

using namespace saltus;

TEST_CASE("make_func: identity and unit function") {
  const RepFunc id = make_func(fx::doc(R"({"domain":[0,1],"c0":0,"continuous":[{"on":[0,1],"expr":{"kind":"poly","coeffs":[0,1]}}],"jumps":[],"overrides":[]})"));
  CHECK(id(0.3) == doctest::Approx(0.3));
  const RepFunc h = make_func(fx::doc(R"({"domain":[0,1],"c0":0,"continuous":[],"jumps":[{"t":"0.5","left":0,"right":1}],"overrides":[]})"));
  CHECK(h(0.5) == 0.0);
  CHECK(h(0.75) == 1.0);
  CHECK(h(0.25) == 0.0);
  CHECK(add(id, h)(0.75) == doctest::Approx(1.75));
}

TEST_CASE("make_func: invariant and schema errors carry pointers") {
  auto expect = [](const char* text, ErrorKind kind, const std::string& ptr) {
    try {
      (void)make_func(fx::doc(text));
      FAIL("expected failure");
    } catch (const DocumentError& e) {
      CHECK(e.kind() == kind);
      CHECK(e.pointer() == ptr);
    }
  };
  expect(R"({"domain":[0,1],"jumps":[{"t":"0.5","left":0,"right":1}],"overrides":[{"t":"0.5","value":3}]})",
         ErrorKind::Invariant, "/overrides/0/t");
  expect(R"({"domain":[0,1],"jumps":[{"t":"0.5","left":0,"right":1},{"t":"0.50","left":1,"right":0}]})",
         ErrorKind::Invariant, "/jumps/1/t");
  expect(R"({"domain":[0,1],"continuous":[{"on":[0,0.6],"expr":{"kind":"poly","coeffs":[0]}},{"on":[0.5,1],"expr":{"kind":"poly","coeffs":[0]}}]})",
         ErrorKind::Invariant, "/continuous/1/on");
  expect(R"({"domain":[0,1],"continuous":[{"on":[0,1],"expr":{"kind":"tanh"}}]})", ErrorKind::Schema,
         "/continuous/0/expr/kind");
  expect(R"({"domain":[0,1],"jumps":[{"t":0.5,"left":0,"right":1}]})", ErrorKind::Schema, "/jumps/0/t");
  expect(R"({"domain":[0,1],"jumps":[{"t":"0","left":1,"right":1}]})", ErrorKind::Invariant, "/jumps/0/left");
}

TEST_CASE("eval outside the domain is a domain error") {
  const RepFunc h = fx::unit(0, 1, "0.5");
  CHECK_THROWS_AS(h(1.5), Error);
  try {
    (void)h(-0.1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("limits_and_jumps") {
  const RepFunc h = fx::unit(0, 1, "0.5");
  const PointInfo p = h.limits(0.5);
  CHECK(p.left_limit == 0.0);
  CHECK(p.right_limit == 1.0);
  CHECK(p.sigma_minus == 0.0);
  CHECK(p.sigma_plus == 1.0);
  CHECK(p.sigma == 1.0);

  const RepFunc id = fx::identity(0, 1);
  const PointInfo q = id.limits(0.3);
  CHECK(q.left_limit == doctest::Approx(0.3));
  CHECK(q.right_limit == doctest::Approx(0.3));
  CHECK(q.sigma == 0.0);

  RepFunc::Parts parts = id.parts();
  parts.overrides.push_back({fx::loc("0.25"), 7.0});
  const RepFunc o(0, 1, parts);
  const PointInfo r = o.limits(0.25);
  CHECK(r.value == 7.0);
  CHECK(r.left_limit == doctest::Approx(0.25));
  CHECK(r.right_limit == doctest::Approx(0.25));
  CHECK(r.sigma == 0.0);
}

TEST_CASE("jump part follows the jump-sum convention") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto toks = fx::random_tokens(rng, 5);
    const RepFunc f = fx::random_func(rng, toks, false);
    std::vector<oracle::Jump> js;
    for (const auto& j : f.jumps()) js.push_back({j.loc.value(), j.left, j.right});
    for (int k = 0; k <= 200; ++k) {
      const double t = k / 200.0;
      CHECK(f.discrete_at(t) == doctest::Approx(oracle::jump_function(js, 0.0, t)).epsilon(1e-13));
    }
    for (const auto& j : js) CHECK(f.discrete_at(j.t) == doctest::Approx(oracle::jump_function(js, 0.0, j.t)));
  }
}

TEST_CASE("geometric series: evaluation agrees with the explicit sum") {
  RepFunc::Parts p;
  p.pieces.push_back({0.0, 1.0, Expr::sin(1.0, 1.0, 0.0)});
  p.series.emplace(JumpSeries::Side::Left, 0.5, 0.5, std::vector<GeometricTerm>{{0.4, -0.6}});
  const RepFunc f(0.0, 1.0, p);
  const auto& s = *f.series();
  auto explicit_fd = [&](double t) {
    double acc = 0.0;
    for (long k = 0; k < 2000; ++k)
      if (s.location(k, 0.0, 1.0) < t) acc += s.magnitude(k);
    return acc;
  };
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double t = u(rng);
    CHECK(f(t) == doctest::Approx(std::sin(t) + explicit_fd(t)).epsilon(1e-12));
  }
  auto [fc, fd] = decompose(f);
  for (int i = 0; i < 10; ++i) {
    const double t = u(rng);
    CHECK(fc(t) == doctest::Approx(std::sin(t)));
    CHECK(fd(t) == doctest::Approx(explicit_fd(t)).epsilon(1e-12));
  }
  CHECK(fd(0.0) == 0.0);
  // One-sided limits at a generated location.
  const double t2 = s.location(2, 0.0, 1.0);
  const PointInfo info = f.limits(t2);
  CHECK(info.sigma_plus == doctest::Approx(s.magnitude(2)));
  CHECK(info.right_limit - info.left_limit == doctest::Approx(s.magnitude(2)));
  CHECK(s.tail_bound(10) < s.tail_bound(5));
}

TEST_CASE("one-sided limits match dyadic approach") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto toks = fx::random_tokens(rng, 4);
    const RepFunc f = fx::random_func(rng, toks);
    for (const auto& tok : toks) {
      const double t = fx::loc(tok).value();
      const PointInfo p = f.limits(t);
      const double h = std::ldexp(1.0, -30);
      CHECK(std::abs(f(t - h) - p.left_limit) <= 1e-8);
      CHECK(std::abs(f(t + h) - p.right_limit) <= 1e-8);
    }
  }
}

TEST_CASE("decompose and rl_split reconstruct f") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto toks = fx::random_tokens(rng, 6);
    const RepFunc f = fx::random_func(rng, toks);
    auto [fc, fd] = decompose(f);
    auto [fp, fm] = rl_split(f);
    CHECK(fc.jumps().empty());
    CHECK(fd(0.0) == 0.0);
    for (const auto& j : fp.jumps()) CHECK(j.right == 0.0);
    for (const auto& j : fm.jumps()) CHECK(j.left == 0.0);
    for (int i = 0; i < 1000; ++i) {
      const double t = u(rng);
      CHECK(std::abs(f(t) - fp(t) - fm(t)) <= 1e-12);
      CHECK(std::abs(f(t) - fc(t) - fd(t)) <= 1e-12);
    }
    for (const auto& tok : toks) {
      const double t = fx::loc(tok).value();
      CHECK(std::abs(f(t) - fp(t) - fm(t)) <= 1e-12);
      CHECK(fp.limits(t).sigma_minus == doctest::Approx(f.limits(t).sigma_minus));
      CHECK(fm.limits(t).sigma_plus == doctest::Approx(f.limits(t).sigma_plus));
    }
  }
}

TEST_CASE("rl_split examples") {
  auto [p1, m1] = rl_split(fx::unit(0, 1, "0.5"));
  CHECK(p1.jumps().empty());
  CHECK(m1(0.75) == 1.0);
  auto [p2, m2] = rl_split(fx::left_unit(0, 1, "0.5"));
  CHECK(p2(0.5) == 1.0);
  CHECK(m2.jumps().empty());
  RepFunc::Parts parts;
  parts.jumps.push_back({fx::loc("0.5"), 2.0, 3.0});
  auto [p3, m3] = rl_split(RepFunc(0, 1, parts));
  CHECK(p3.limits(0.5).sigma_minus == 2.0);
  CHECK(p3.limits(0.5).sigma_plus == 0.0);
  CHECK(m3.limits(0.5).sigma_plus == 3.0);
  CHECK(m3.limits(0.5).sigma_minus == 0.0);
}

TEST_CASE("combine examples") {
  const RepFunc h = fx::unit(0, 1, "0.5");
  const RepFunc hh = add(h, h);
  REQUIRE(hh.jumps().size() == 1);
  CHECK(hh.jumps()[0].left == 0.0);
  CHECK(hh.jumps()[0].right == 2.0);
  const RepFunc s = scale(h, -3.0);
  CHECK(s.jumps()[0].right == -3.0);
  const RepFunc m = mul(h, h);
  for (double t : {0.25, 0.5 - 1e-9, 0.5, 0.5 + 1e-9, 0.75}) CHECK(m(t) == h(t));
  CHECK_THROWS_AS(add(h, fx::unit(0, 2, "0.5")), Error);
}

TEST_CASE("product one-sided limits are products of limits") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto toks = fx::random_tokens(rng, 4);
    const RepFunc f = fx::random_func(rng, {toks[0], toks[1], toks[2]});
    const RepFunc g = fx::random_func(rng, {toks[1], toks[2], toks[3]});
    const RepFunc fg = mul(f, g);
    for (const auto& tok : toks) {
      const double t = fx::loc(tok).value();
      const PointInfo a = f.limits(t);
      const PointInfo b = g.limits(t);
      const PointInfo c = fg.limits(t);
      CHECK(std::abs(c.left_limit - a.left_limit * b.left_limit) <= 1e-12);
      CHECK(std::abs(c.right_limit - a.right_limit * b.right_limit) <= 1e-12);
      CHECK(std::abs(c.value - a.value * b.value) <= 1e-12);
    }
  }
}

TEST_CASE("series products are refused") {
  RepFunc::Parts p;
  p.series.emplace(JumpSeries::Side::Right, 0.5, 0.5, std::vector<GeometricTerm>{{1.0, 0.5}});
  const RepFunc f(0, 1, p);
  try {
    (void)mul(f, f);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedProduct);
  }
}

namespace {

void check_step(const RepFunc& f, double eps) {
  const StepFunc s = step_approx(f, eps);
  std::vector<double> grid;
  for (std::size_t i = 0; i + 1 < s.breakpoints.size(); ++i)
    grid.push_back(0.5 * (s.breakpoints[i] + s.breakpoints[i + 1]));
  for (double t : s.breakpoints) grid.push_back(t);
  for (const auto& loc : f.special_points()) {
    const double t = loc.value();
    for (double d : {-std::ldexp(1.0, -20), std::ldexp(1.0, -20)})
      if (t + d > f.a() && t + d < f.b()) grid.push_back(t + d);
  }
  for (int k = 0; k <= 5000; ++k) grid.push_back(f.a() + (f.b() - f.a()) * k / 5000.0);
  double worst = 0.0;
  for (double t : grid) worst = std::max(worst, std::abs(f(t) - s.eval(t)));
  CHECK(worst <= eps);
}

}  // namespace

TEST_CASE("step_approx") {
  const StepFunc s = step_approx(fx::identity(0, 1), 0.1);
  CHECK(s.values.size() == 10);
  check_step(fx::identity(0, 1), 0.1);
  const RepFunc h = fx::unit(0, 1, "0.5");
  const StepFunc sh = step_approx(h, 0.01);
  CHECK(sh.values.size() == 2);
  for (double t : {0.0, 0.3, 0.5, 0.6, 1.0}) CHECK(sh.eval(t) == h(t));
  check_step(fx::expr_func(0, 2 * std::numbers::pi, Expr::sin(1.0, 1.0, 0.0)), 0.01);
  std::mt19937 rng(29);
  for (int i = 0; i < 5; ++i) check_step(fx::random_func(rng, fx::random_tokens(rng, 3)), 0.05);
}

TEST_CASE("abs and pow_abs") {
  const RepFunc f = fx::expr_func(0, 2 * std::numbers::pi, Expr::sin(1.0, 1.0, 0.0));
  const RepFunc a = abs(f);
  const RepFunc p = pow_abs(f, 2.5);
  for (int k = 0; k <= 100; ++k) {
    const double t = 2 * std::numbers::pi * k / 100.0;
    CHECK(a(t) == doctest::Approx(std::abs(std::sin(t))).epsilon(1e-12));
    CHECK(p(t) == doctest::Approx(std::pow(std::abs(std::sin(t)), 2.5)).epsilon(1e-10));
  }
  std::mt19937 rng(31);
  const RepFunc g = fx::random_func(rng, fx::random_tokens(rng, 4));
  const RepFunc ag = abs(g);
  for (int k = 0; k <= 300; ++k) {
    const double t = k / 300.0;
    CHECK(ag(t) == doctest::Approx(std::abs(g(t))).epsilon(1e-12));
  }
}
