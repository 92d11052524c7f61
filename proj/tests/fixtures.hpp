#pragma once

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saltus/funcrep.hpp"

namespace fx {

using saltus::Expr;
using saltus::Location;
using saltus::RepFunc;

inline Location loc(const std::string& token) { return Location::from_token(token); }

inline RepFunc unit(double a, double b, const std::string& c) { return RepFunc::unit(a, b, loc(c)); }

inline RepFunc identity(double a, double b) { return RepFunc::from_expr(a, b, Expr::poly({0.0, 1.0})); }

inline RepFunc expr_func(double a, double b, const Expr& e) { return RepFunc::from_expr(a, b, e); }

inline RepFunc with_jumps(const RepFunc& f, const std::vector<saltus::JumpRecord>& jumps) {
  RepFunc::Parts p = f.parts();
  p.jumps.insert(p.jumps.end(), jumps.begin(), jumps.end());
  return RepFunc(f.a(), f.b(), std::move(p), -1.0);
}

/// 1[t >= c]: a left jump.
inline RepFunc left_unit(double a, double b, const std::string& c) {
  RepFunc::Parts p;
  p.jumps.push_back({loc(c), 1.0, 0.0});
  return RepFunc(a, b, std::move(p));
}

inline std::string token(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

/// Random smooth expression drawn from the catalogue.
inline Expr random_expr(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 4);
  switch (pick(rng)) {
    case 0: return Expr::poly({u(rng), u(rng), u(rng)});
    case 1: return Expr::sin(u(rng), 2.0 + 3.0 * std::abs(u(rng)), u(rng));
    case 2: return Expr::exp(u(rng), 0.3 * u(rng));
    case 3: return Expr::poly({u(rng), u(rng)}) + Expr::cos(0.5 * u(rng), 4.0, u(rng));
    default: return Expr::poly({u(rng), 0.0, 0.0, u(rng)});
  }
}

/// Decimal tokens on the 1/1000 grid strictly inside (a, b) for a = 0, b = 1.
inline std::vector<std::string> random_tokens(std::mt19937& rng, int n) {
  std::uniform_int_distribution<int> k(1, 999);
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < n) {
    const std::string t = token(k(rng) / 1000.0);
    bool dup = false;
    for (const auto& s : out) dup = dup || s == t;
    if (!dup) out.push_back(t);
  }
  return out;
}

/// Representable function on [0, 1]: smooth part split into pieces plus
/// random jumps at the given tokens.
inline RepFunc random_func(std::mt19937& rng, const std::vector<std::string>& tokens, bool smooth = true,
                           bool both_sides = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RepFunc::Parts p;
  p.c0 = u(rng);
  if (smooth) {
    const Expr e = random_expr(rng);
    const double m = 0.25 + 0.5 * std::abs(u(rng));
    p.pieces.push_back({0.0, m, e});
    p.pieces.push_back({m, 1.0, e});
  }
  for (const auto& t : tokens) {
    const double l = both_sides ? u(rng) : 0.0;
    p.jumps.push_back({loc(t), l, u(rng)});
  }
  return RepFunc(0.0, 1.0, std::move(p));
}

inline nlohmann::json doc(const std::string& text) { return nlohmann::json::parse(text); }

}  // namespace fx
