#pragma once

#include <vector>

#include "saltus/funcrep.hpp"

namespace saltus {

/// y_eps(t) = (1/eps) int_t^{t+eps} y_+ + (1/eps) int_{t-eps}^t y_-, where
/// y = y_+ + y_- is the split of rl_split and y is extended by y(a) to the
/// left of a and by y(b) to the right of b. Overrides are dropped and series
/// materialized first. The result is continuous, with breakpoints at the
/// original points shifted by +-eps.
RepFunc mollify(const RepFunc& y, double eps, const Options& opt = {});

struct MollifyRow {
  double eps = 0.0;
  double integral = 0.0;   // (RS) int x_eps dg_eps
  double error_bound = 0.0;
  double sup_dev = 0.0;    // max over x, g of sup |y_eps - y| off jumps and boundary layers
  double var_dev = 0.0;    // |V(g_eps) - V(g)|
  double int_dev = 0.0;    // |int x_eps dg_eps - (*) int x dg|
  double var_phi = 0.0;    // V of t -> int_a^t x_eps dg_eps
};

struct MollifyReport {
  double reference = 0.0;  // (*) int x dg
  /// reference + (1/2) sum over common jumps of s+(x) s+(g) - s-(x) s-(g),
  /// the actual limit of the mollified integrals.
  double shared_limit = 0.0;
  double variation_g = 0.0;
  std::vector<MollifyRow> rows;
};

/// Mollifies x and g for every eps of a strictly decreasing grid.
MollifyReport mollify_convergence_report(const RepFunc& x, const RepFunc& g, const std::vector<double>& eps_grid,
                                         const Options& opt = {});

/// sup |y_eps - y| on a uniform sample of [a + eps, b - eps] that avoids
/// the eps-neighbourhoods of the discontinuities of y.
double sup_deviation(const RepFunc& y, const RepFunc& y_eps, double eps, int samples = 4001);

}  // namespace saltus
