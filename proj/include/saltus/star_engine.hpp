#pragma once

#include <utility>
#include <vector>

#include "saltus/funcrep.hpp"
#include "saltus/rs_engine.hpp"

namespace saltus {

struct StarResult {
  double value = 0.0;
  double error_bound = 0.0;
  double rs_part = 0.0;
  double boundary_left = 0.0;
  double interior_sum = 0.0;
  double boundary_right = 0.0;
  int depth = 0;
  long series_terms = 0;
};

/// (*) int_a^b f dg = int f dg_c + f(a) sigma_a^+(g) + sum_{(a,b)} f(t) sigma_t(g)
/// + f(b) sigma_b^-(g). A representable g always has an absolutely summable
/// jump set, so this form applies to every pair; UnsupportedPair is raised
/// only for a g whose jump mass is not finite.
StarResult star_integral(const RepFunc& f, const RepFunc& g, const Options& opt = {});

/// The same over [c, d] inside the domain, with the boundary terms taken at
/// c and d. Zero when c == d.
StarResult star_integral(const RepFunc& f, const RepFunc& g, double c, double d, const Options& opt = {});

struct Indefinite {
  RepFunc phi;
  double error_bound = 0.0;
};

/// Phi(t) = (*) int_a^t f dg. Jumps of Phi are f(t) times the one-sided
/// jumps of g; the continuous part is the running integral against g_c,
/// one primitive per cell. Series of g are materialized first.
Indefinite star_indefinite(const RepFunc& f, const RepFunc& g, const Options& opt = {});

/// (*) int |f| dg_pi, the variation of the indefinite integral.
StarResult variation_of_indefinite(const RepFunc& f, const RepFunc& g, const Options& opt = {});

struct Residual {
  double residual = 0.0;
  double bound = 0.0;
  double lhs = 0.0;         // (*) int f dg + (*) int g df
  double boundary = 0.0;    // f g |_a^b
  double correction = 0.0;  // sum over common jumps of s+ s+ - s- s-
};

/// Residual of the integration by parts formula for *-integrals.
Residual star_by_parts_residual(const RepFunc& f, const RepFunc& g, const Options& opt = {});

/// h(t, s) = sum_i u_i(t) v_i(s), u_i on the domain of f, v_i on that of g.
struct SeparableKernel {
  std::vector<std::pair<RepFunc, RepFunc>> terms;
};

struct TwoSided {
  double lhs = 0.0;
  double rhs = 0.0;
  double bound = 0.0;
};

/// lhs = (*) int_a^b ((*) int_c^d h dg(s)) df(t), rhs with the order swapped.
TwoSided star_fubini(const SeparableKernel& h, const RepFunc& f, const RepFunc& g, const Options& opt = {});

/// lhs = (*) int |x y| dg, rhs = ||x||_p ||y||_q with q = p / (p - 1).
TwoSided holder_check(const RepFunc& x, const RepFunc& y, const RepFunc& g, double p, const Options& opt = {});

/// lhs = ||x + y||_p, rhs = ||x||_p + ||y||_p.
TwoSided minkowski_check(const RepFunc& x, const RepFunc& y, const RepFunc& g, double p, const Options& opt = {});

struct NormWitness {
  double norm_est = 0.0;
  double error_bound = 0.0;
  double variation = 0.0;
  RepFunc witness;
  std::vector<double> partition;
};

/// For g with g(a) = 0: a partition that captures V(g_c) and all but eps/4
/// of the jump mass, and the sign witness x with sup |x| = 1 and
/// (*) int x dg > V(g_c) + sum |sigma_t(g)| - eps. This equals V(g) - eps
/// when the one-sided jumps of g at each point share a sign.
NormWitness functional_norm_witness(const RepFunc& g, double eps, const Options& opt = {});

}  // namespace saltus
