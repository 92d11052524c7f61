#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "saltus/errors.hpp"
#include "saltus/qde.hpp"

using namespace saltus;

namespace {

RepFunc zero() { return RepFunc::constant(0.0, 1.0, 0.0); }

CoefficientSet coeffs(std::vector<RepFunc> p) { return make_coefficients(std::move(p)); }

double x_at(const Trajectory& tr, double t, std::size_t c = 0, int side = 0) {
  const long i = tr.find(t, side);
  REQUIRE(i >= 0);
  return tr.x_derivs[static_cast<std::size_t>(i)][c];
}

// Exact derivative of a continuous piecewise-smooth function.
RepFunc deriv(const RepFunc& f) {
  const std::vector<const RepFunc*> fs{&f};
  std::vector<Cell> cells;
  for (const auto& c : cells_of(f, merged_points(fs))) cells.push_back({c.u, c.v, c.expr.derivative()});
  return from_cells(f.a(), f.b(), cells, {});
}

/// Classical solution of x^(n) + sum p_k' x^(n-k) = p_{n+1}' at t.
std::vector<double> classical(const std::vector<std::function<double(double)>>& dp, std::vector<double> gamma, double t) {
  const std::size_t n = gamma.size();
  auto f = [&](double s, const std::vector<double>& y) {
    std::vector<double> d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = y[i + 1];
    double top = dp[n](s);
    for (std::size_t k = 1; k <= n; ++k) top -= dp[k - 1](s) * y[n - k];
    d[n - 1] = top;
    return d;
  };
  if (t == 0.0) return gamma;
  return oracle::rk4(f, std::move(gamma), 0.0, t, 4000);
}

}  // namespace

TEST_CASE("coefficient classes") {
  CHECK(coeffs({zero(), zero(), zero()}).condition_class == ConditionClass::A);
  CHECK(coeffs({zero(), fx::unit(0.0, 1.0, "0.5"), zero()}).condition_class == ConditionClass::CDelta);
  RepFunc::Parts p;
  p.overrides.push_back({fx::loc("0.3"), 1.0});
  const RepFunc ov(0.0, 1.0, p);
  CHECK(coeffs({ov, fx::unit(0.0, 1.0, "0.5"), zero()}).condition_class == ConditionClass::C);
  CHECK(coeffs({ov, fx::identity(0.0, 1.0), zero()}).condition_class == ConditionClass::D);
  CHECK_THROWS_AS(coeffs({zero(), zero()}), Error);
  RepFunc::Parts s;
  s.series = JumpSeries(JumpSeries::Side::Right, 0.25, 0.5, {{0.5, 0.5}});
  try {
    coeffs({zero(), RepFunc(0.0, 1.0, s), zero()});
    FAIL("series accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedSeries);
  }
}

TEST_CASE("H and P examples") {
  const HMatrix id = build_H(coeffs({zero(), zero(), zero()}));
  for (double t : {0.0, 0.3, 1.0}) {
    CHECK(id.h(1, 1)(t) == 1.0);
    CHECK(id.h(2, 2)(t) == 1.0);
    CHECK(id.h(2, 1)(t) == 0.0);
  }
  const TriMatrix pid = build_P(id);
  for (int i = 0; i <= 2; ++i)
    for (int k = 0; k <= i; ++k) CHECK(pid(i, k)(0.4) == (i == k ? 1.0 : 0.0));

  const HMatrix e = build_H(coeffs({fx::identity(0.0, 1.0), zero(), zero()}));
  for (int k = 0; k <= 20; ++k) {
    const double t = k / 20.0;
    CHECK(std::abs(e.h(2, 2)(t) - std::exp(t)) <= 1e-12);
  }

  const double sigma = 0.7;
  const RepFunc impulse = scale(fx::unit(0.0, 1.0, "0.5"), sigma);
  const HMatrix hs = build_H(coeffs({zero(), impulse, zero()}));
  const TriMatrix ps = build_P(hs);
  for (double t : {0.1, 0.5, 0.50001, 0.9}) {
    const double u = t > 0.5 ? 1.0 : 0.0;
    CHECK(std::abs(hs.h(2, 1)(t) - sigma * u) <= 1e-12);
    CHECK(std::abs(ps(1, 0)(t) - sigma * u) <= 1e-12);
    CHECK(std::abs(ps(2, 1)(t) + sigma * u) <= 1e-12);
    CHECK(std::abs(ps(2, 0)(t) - sigma * sigma * u) <= 1e-12);
    CHECK(ps(2, 2)(t) == 1.0);
  }

  const HMatrix h3 = build_H(coeffs({zero(), zero(), zero(), zero()}));
  const TriMatrix p3 = build_P(h3);
  for (int i = 0; i <= 3; ++i)
    for (int k = 0; k <= i; ++k) CHECK(p3(i, k)(0.7) == (i == k ? 1.0 : 0.0));
}

TEST_CASE("P solves the elimination systems") {
  std::mt19937 rng(211);
  for (int n : {2, 3, 4}) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<RepFunc> p;
      for (int k = 0; k <= n; ++k) p.push_back(scale(fx::random_func(rng, fx::random_tokens(rng, 2)), 0.5));
      const HMatrix H = build_H(coeffs(p));
      for (int k = 1; k <= n; ++k) {
        CHECK(std::abs(H.h(k, k)(0.0) - 1.0) <= 1e-12);
        for (int j = 1; j < k; ++j) CHECK(std::abs(H.h(k, j)(0.0)) <= 1e-12);
      }
      const TriMatrix P = build_P(H);
      CHECK(p_residual(H, P) <= 1e-9);
      for (double t : {0.05, 0.5, 0.95}) CHECK(std::abs(P(n, n)(t) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("quasi-derivatives of a polynomial") {
  const std::vector<RepFunc> p{fx::expr_func(0.0, 1.0, Expr::poly({0.0, 0.5})),
                               fx::expr_func(0.0, 1.0, Expr::sin(1.0, 1.0, 0.0)),
                               fx::expr_func(0.0, 1.0, Expr::poly({0.0, 0.0, 0.3})),
                               fx::expr_func(0.0, 1.0, Expr::exp(0.5, 0.0))};
  const HMatrix H = build_H(coeffs(p));
  const TriMatrix P = build_P(H);
  const RepFunc x = fx::expr_func(0.0, 1.0, Expr::poly({0.3, -1.0, 0.5, 2.0}));
  std::vector<RepFunc> q{mul(P(0, 0), x)};
  for (int k = 1; k < 3; ++k) {
    RepFunc next = mul(P(k, k), deriv(q.back()));
    for (int i = 0; i < k; ++i) next = add(next, mul(P(k, i), q[static_cast<std::size_t>(i)]));
    q.push_back(next);
  }
  const std::vector<RepFunc> dx{x, deriv(x), deriv(deriv(x))};
  for (int s = 0; s < 20; ++s) {
    const double t = (s + 0.37) / 20.0;
    for (int k = 0; k < 3; ++k) {
      double hx = 0.0;
      for (int i = 0; i <= k; ++i) hx += H.h(k + 1, i + 1)(t) * dx[static_cast<std::size_t>(i)](t);
      CHECK(std::abs(q[static_cast<std::size_t>(k)](t) - hx) <= 1e-8);
    }
  }
}

TEST_CASE("assembled system examples") {
  const QdeSystem s = build_system(coeffs({zero(), zero(), zero()}), {1.0, 2.0});
  for (double t : {0.0, 0.5, 1.0}) {
    CHECK(s.A[0][0](t) == 0.0);
    CHECK(s.A[0][1](t) == 1.0);
    CHECK(s.A[1][0](t) == 0.0);
    CHECK(s.A[1][1](t) == 0.0);
    CHECK(s.F[0](t) == 0.0);
    CHECK(s.F[1](t) == 0.0);
  }
  CHECK(s.xi == std::vector<double>{1.0, 2.0});

  const RepFunc h = fx::unit(0.0, 1.0, "0.5");
  const QdeSystem f = build_system(coeffs({zero(), zero(), h}), {1.0, 0.0});
  CHECK(f.xi == std::vector<double>{1.0, 0.0});
  for (double t : {0.2, 0.5, 0.6, 1.0}) {
    CHECK(f.h0[1](t) == h(t));
    CHECK(f.F[0](t) == h(t));
    CHECK(f.F[1](t) == 0.0);
  }
  CHECK(f.events == std::vector<double>{0.5});
}

TEST_CASE("trivial problem") {
  for (const auto& gamma : std::vector<std::vector<double>>{{1.0, 2.0}, {-0.5, 0.25}}) {
    const QdeSystem s = build_system(coeffs({zero(), zero(), zero()}), gamma);
    const Trajectory tr = solve_cauchy(s);
    CHECK(tr.grid.size() >= 2);
    for (std::size_t i = 0; i < tr.grid.size(); ++i)
      CHECK(std::abs(tr.x_derivs[i][0] - (gamma[0] + gamma[1] * tr.grid[i])) <= 1e-8);
  }
  const QdeSystem s3 = build_system(coeffs({zero(), zero(), zero(), zero()}), {1.0, -1.0, 2.0});
  const Trajectory t3 = solve_cauchy(s3, 1e-10, {0.25, 0.5, 1.0});
  CHECK(std::abs(x_at(t3, 1.0) - (1.0 - 1.0 + 1.0)) <= 1e-8);
  CHECK(std::abs(x_at(t3, 0.5, 1) - (-1.0 + 2.0 * 0.5)) <= 1e-8);
}

TEST_CASE("classical problems") {
  const QdeSystem s = build_system(coeffs({fx::identity(0.0, 1.0), zero(), zero()}), {0.0, 1.0});
  const Trajectory tr = solve_cauchy(s);
  for (std::size_t i = 0; i < tr.grid.size(); ++i) {
    const double t = tr.grid[i];
    CHECK(std::abs(tr.x_derivs[i][0] - (1.0 - std::exp(-t))) <= 1e-6);
    CHECK(std::abs(tr.x_derivs[i][1] - std::exp(-t)) <= 1e-6);
  }

  // x'' + x' = 1 with zero data: x = t - 1 + e^{-t}.
  const QdeSystem f = build_system(coeffs({fx::identity(0.0, 1.0), zero(), fx::identity(0.0, 1.0)}), {0.0, 0.0});
  const Trajectory tf = solve_cauchy(f, 1e-10, {0.3, 0.7, 1.0});
  for (double t : {0.3, 0.7, 1.0}) CHECK(std::abs(x_at(tf, t) - (t - 1.0 + std::exp(-t))) <= 1e-8);
}

TEST_CASE("agreement with a direct classical integration") {
  const std::vector<RepFunc> p{fx::expr_func(0.0, 1.0, Expr::poly({0.0, 0.5})),
                               fx::expr_func(0.0, 1.0, Expr::sin(1.0, 1.0, 0.0)),
                               fx::expr_func(0.0, 1.0, Expr::poly({0.0, 0.0, 0.3})),
                               fx::expr_func(0.0, 1.0, Expr::exp(0.5, 0.0))};
  const std::vector<std::function<double(double)>> dp{[](double) { return 0.5; }, [](double t) { return std::cos(t); },
                                                      [](double t) { return 0.6 * t; },
                                                      [](double t) { return 0.5 * std::exp(0.5 * t); }};
  const std::vector<double> gamma{1.0, -0.5, 0.25};
  const std::vector<double> times{0.2, 0.5, 0.8, 1.0};
  const Trajectory tr = solve_cauchy(build_system(coeffs(p), gamma), 1e-10, times);
  for (double t : times) {
    const auto ref = classical(dp, gamma, t);
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(x_at(tr, t, c) - ref[c]) <= 1e-6);
  }

  // Order 2 with a forcing term.
  const std::vector<RepFunc> q{fx::expr_func(0.0, 1.0, Expr::cos(0.4, 2.0, 0.0)),
                               fx::expr_func(0.0, 1.0, Expr::poly({0.0, -1.0, 0.5})),
                               fx::expr_func(0.0, 1.0, Expr::sin(1.0, 3.0, 0.0))};
  const std::vector<std::function<double(double)>> dq{[](double t) { return -0.8 * std::sin(2.0 * t); },
                                                      [](double t) { return -1.0 + t; },
                                                      [](double t) { return 3.0 * std::cos(3.0 * t); }};
  const Trajectory tq = solve_cauchy(build_system(coeffs(q), {0.5, 1.0}), 1e-10, times);
  for (double t : times) {
    const auto ref = classical(dq, {0.5, 1.0}, t);
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(x_at(tq, t, c) - ref[c]) <= 1e-6);
  }
}

TEST_CASE("impulse problems") {
  const RepFunc h = fx::unit(0.0, 1.0, "0.5");
  const QdeSystem s = build_system(coeffs({zero(), h, zero()}), {1.0, 0.0});
  CHECK(s.events == std::vector<double>{0.5});
  const Trajectory tr = solve_cauchy(s, 1e-10, {0.25, 0.75, 1.0});
  CHECK(std::abs(x_at(tr, 0.25) - 1.0) <= 1e-9);
  CHECK(std::abs(x_at(tr, 0.75) - 0.75) <= 1e-9);
  CHECK(std::abs(x_at(tr, 1.0) - 0.5) <= 1e-6);
  const double xc = x_at(tr, 0.5, 0, -1);
  CHECK(std::abs(x_at(tr, 0.5, 0, 1) - xc) <= 1e-12);
  const double jump = x_at(tr, 0.5, 1, 1) - x_at(tr, 0.5, 1, -1);
  CHECK(std::abs(jump + 1.0 * xc) <= 1e-6);
  CHECK(tr.find(0.5, 0) < 0);

  // Randomized single impulses: the jump law and continuity of y.
  std::mt19937 rng(223);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const std::string c = fx::random_tokens(rng, 1).front();
    const double sigma = u(rng);
    const RepFunc p2 = add(scale(fx::unit(0.0, 1.0, c), sigma), fx::expr_func(0.0, 1.0, Expr::poly({0.0, u(rng)})));
    const RepFunc p1 = fx::expr_func(0.0, 1.0, Expr::poly({0.0, u(rng)}));
    const QdeSystem q = build_system(coeffs({p1, p2, zero()}), {u(rng), u(rng)});
    const Trajectory t = solve_cauchy(q, 1e-10);
    const double e = q.events.front();
    const long l = t.find(e, -1);
    const long r = t.find(e, 1);
    REQUIRE(l >= 0);
    REQUIRE(r >= 0);
    for (std::size_t k = 0; k < 2; ++k) CHECK(t.y[static_cast<std::size_t>(l)][k] == t.y[static_cast<std::size_t>(r)][k]);
    const double x = t.x_derivs[static_cast<std::size_t>(l)][0];
    const double d = t.x_derivs[static_cast<std::size_t>(r)][1] - t.x_derivs[static_cast<std::size_t>(l)][1];
    CHECK(std::abs(d + sigma * x) <= 1e-6);
  }

  // Forcing impulse: x'' = delta_c gives x = (t - c)_+.
  const Trajectory tf = solve_cauchy(build_system(coeffs({zero(), zero(), h}), {0.0, 0.0}), 1e-10, {0.25, 0.75, 1.0});
  CHECK(std::abs(x_at(tf, 0.25)) <= 1e-9);
  CHECK(std::abs(x_at(tf, 0.75) - 0.25) <= 1e-9);
  CHECK(std::abs(x_at(tf, 1.0) - 0.5) <= 1e-9);
  CHECK(std::abs(x_at(tf, 0.5, 1, 1) - x_at(tf, 0.5, 1, -1) - 1.0) <= 1e-9);
}

TEST_CASE("trajectory csv") {
  const QdeSystem s = build_system(coeffs({zero(), fx::unit(0.0, 1.0, "0.5"), zero()}), {1.0, 0.0});
  const Trajectory tr = solve_cauchy(s);
  std::ostringstream os;
  tr.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,side,y1,y2,x,x1");
  std::size_t rows = 0;
  std::size_t marked = 0;
  while (std::getline(is, line)) {
    ++rows;
    if (line.find(",-,") != std::string::npos || line.find(",+,") != std::string::npos) ++marked;
  }
  CHECK(rows == tr.grid.size());
  CHECK(marked == 2);
  for (std::size_t i = 1; i < tr.grid.size(); ++i) CHECK(tr.grid[i - 1] <= tr.grid[i]);
}

TEST_CASE("delta correctness") {
  const RepFunc h = fx::unit(0.0, 1.0, "0.5");
  const DeltaReport r = delta_correctness(coeffs({zero(), h, zero()}), {1.0, 0.0}, {0.1, 0.05, 0.025});
  REQUIRE(r.rows.size() == 3);
  for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].deviation < r.rows[i - 1].deviation);
  for (const auto& row : r.rows) CHECK(row.deviation <= row.eps);
  // The mollified impulse acts on [c, c + eps] as x'' = -x / eps, so
  // x_eps(1) = cos(sqrt(eps)) - sin(sqrt(eps)) / sqrt(eps) * (0.5 - eps).
  for (const auto& row : r.rows) {
    const double w = std::sqrt(row.eps);
    const double x1 = std::cos(w) - std::sin(w) / w * (0.5 - row.eps);
    CHECK(row.argmax == 1.0);
    CHECK(std::abs(row.deviation - std::abs(x1 - 0.5)) <= 1e-6);
  }

  const DeltaReport c = delta_correctness(coeffs({zero(), zero(), zero()}), {1.0, 2.0}, {0.1, 0.05});
  for (const auto& row : c.rows) CHECK(row.deviation <= 1e-8);

  RepFunc::Parts p;
  p.overrides.push_back({fx::loc("0.3"), 1.0});
  try {
    delta_correctness(coeffs({RepFunc(0.0, 1.0, p), h, zero()}), {1.0, 0.0}, {0.1});
    FAIL("override accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConditionViolation);
  }
}

TEST_CASE("ODE problem documents") {
  const auto doc = fx::doc(R"({"n": 2, "domain": [0, 1], "gamma": [1, 0], "tol": 1e-9,
    "p": [{"domain": [0, 1]},
          {"domain": [0, 1], "jumps": [{"t": "0.5", "left": 0, "right": 1}]},
          {"domain": [0, 1]}]})");
  const OdeProblem pr = parse_ode_problem(doc);
  CHECK(pr.coeffs.n == 2);
  CHECK(pr.tol == 1e-9);
  CHECK(pr.coeffs.condition_class == ConditionClass::CDelta);
  const Trajectory tr = solve_cauchy(build_system(pr.coeffs, pr.gamma), pr.tol, {1.0});
  CHECK(std::abs(x_at(tr, 1.0) - 0.5) <= 1e-6);

  auto pointer_of = [](const nlohmann::json& d) {
    try {
      parse_ode_problem(d);
    } catch (const DocumentError& e) {
      return e.pointer();
    }
    return std::string("none");
  };
  CHECK(pointer_of(fx::doc(R"({"n": 2, "domain": [0, 1], "gamma": [1, 0], "p": [{"domain": [0, 1]}]})")) == "/p");
  CHECK(pointer_of(fx::doc(R"({"n": 2, "domain": [0, 1], "gamma": [1, 0],
    "p": [{"domain": [0, 1]}, {"domain": [0, 1], "bogus": 1}, {"domain": [0, 1]}]})")) == "/p/1/bogus");
  CHECK(pointer_of(fx::doc(R"({"n": 2, "domain": [0, 1], "gamma": [1],
    "p": [{"domain": [0, 1]}, {"domain": [0, 1]}, {"domain": [0, 1]}]})")) == "/gamma");
}
