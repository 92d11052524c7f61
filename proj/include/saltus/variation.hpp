#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "saltus/funcrep.hpp"
#include "saltus/interval.hpp"

namespace saltus {

/// Sorted points a = t_0 < ... < t_n = b.
struct Partition {
  std::vector<double> points;

  static Partition uniform(double a, double b, int n);
  /// Throws Domain unless strictly increasing from a to b.
  void check(double a, double b) const;
};

/// sum |f(t_k) - f(t_{k-1})| for any callable f.
template <typename F>
double partition_sum(const F& f, const std::vector<double>& points) {
  double s = 0.0;
  double prev = points.empty() ? 0.0 : f(points.front());
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double cur = f(points[i]);
    s += std::abs(cur - prev);
    prev = cur;
  }
  return s;
}

double partition_sum(const RepFunc& f, const Partition& p);

struct VariationResult {
  bool infinite_suspected = false;
  double value = 0.0;
  Interval enclosure;
  double continuous = 0.0;  // V(f_c)
  double discrete = 0.0;    // V(f_d)
  int levels = 0;           // refinement levels (sampled estimates only)
};

/// V(f) = V(f_c) + V(f_d). The continuous part is split into monotone
/// segments at the critical points of every piece; the jump part sums
/// |sigma^-| + |sigma^+| (overrides count twice their offset). Raises
/// BudgetExceeded when the enclosure is wider than opt.tol.
VariationResult total_variation(const RepFunc& f, const Options& opt = {});

/// Monotone segment boundaries of e on [u, v] (u and v included) plus a
/// bound on the variation that the segmentation may have missed.
struct MonotoneCuts {
  std::vector<double> cuts;
  double slack = 0.0;
};
MonotoneCuts monotone_cuts(const Expr& e, double u, double v);

struct SampledVariationOptions {
  int max_level = 20;
  double divergence_budget = 1e6;
};

/// Lower bounds from dyadic partitions of a black-box function. Flags
/// infinite_suspected when a bound exceeds the divergence budget or the
/// bounds keep growing without geometric decay of the increments; the
/// finite estimate extrapolates the increments and is not certified.
VariationResult sampled_variation(const std::function<double(double)>& f, double a, double b,
                                  const SampledVariationOptions& opt = {});

/// Jordan decomposition f = f_pi - f_nu with f_pi(t) = V_a^t(f). A series
/// with several geometric terms is materialized to opt.series_tol in f_pi,
/// and f_nu is then built from the same truncation of f.
std::pair<RepFunc, RepFunc> variation_function(const RepFunc& f, const Options& opt = {});

/// V(g) = g(b) - g(a) within tol.
bool is_increasing(const RepFunc& g, double tol = 1e-10);

/// sum over the open intervals of g(b_k-) - g(a_k+) for increasing g.
double g_measure_open(const RepFunc& g, const std::vector<std::pair<double, double>>& intervals);

}  // namespace saltus
