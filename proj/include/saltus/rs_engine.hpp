#pragma once

#include <string>
#include <utility>
#include <vector>

#include "saltus/funcrep.hpp"
#include "saltus/interval.hpp"
#include "saltus/variation.hpp"

namespace saltus {

struct TaggedPartition {
  Partition partition;
  std::vector<double> tags;  // tags[k] in [t_k, t_{k+1}]

  static TaggedPartition midpoints(const Partition& p);
  void check(double a, double b) const;
};

/// sum f(xi_k) (g(t_k) - g(t_{k-1})).
double stieltjes_sum(const RepFunc& f, const RepFunc& g, const TaggedPartition& tp);

/// Lower and upper Darboux sums against an increasing g. Cell extrema come
/// from certified range enclosures, so s <= every Stieltjes sum <= S.
std::pair<double, double> darboux_bounds(const RepFunc& f, const RepFunc& g, const Partition& p);

enum class Existence { Ok, CommonDiscontinuity, MeasureFail };

struct ExistenceCheck {
  Existence status = Existence::Ok;
  std::string loc;
  bool ok() const { return status == Existence::Ok; }
};

/// A shared discontinuity (exact location match) rules out the classical
/// integral. Matches against generated series points are MeasureFail.
ExistenceCheck rs_exists_check(const RepFunc& f, const RepFunc& g);

const char* to_string(Existence e);

/// int_c^d f dg_c, the integral against the continuous part of g. Series of
/// f are truncated to opt.series_tol and the dropped mass is charged against
/// a bound on V(g_c).
struct ContinuousIntegral {
  Interval enclosure;
  int depth = 0;
  long cells = 0;
};
ContinuousIntegral integrate_continuous(const RepFunc& f, const RepFunc& g, double c, double d, const Options& opt);

/// Jump part of the integral over [c, d]: f(c) sigma_c^+(g), the sum of
/// f(t) sigma_t(g) over jumps of g inside (c, d) (series in ascending index
/// order, cut where the tail weighted by sup |f| drops below
/// opt.series_tol), and f(d) sigma_d^-(g).
struct JumpTerms {
  double left = 0.0;
  double interior = 0.0;
  double right = 0.0;
  double error = 0.0;
  long series_terms = 0;
};
JumpTerms jump_terms(const RepFunc& f, const RepFunc& g, double c, double d, const Options& opt);

enum class EnclosureStatus { Certified, Nonexistent, Budget };

struct Enclosure {
  double lo = 0.0;
  double hi = 0.0;
  int depth = 0;
  EnclosureStatus status = EnclosureStatus::Certified;
  double value() const { return 0.5 * (lo + hi); }
  double error() const { return 0.5 * (hi - lo); }
};

const char* to_string(EnclosureStatus s);

/// Classical integral: existence pre-check, then the continuous part by
/// validated quadrature plus the exact jump sum of g. Throws
/// NonexistentError when the pre-check fails; status Budget when the
/// enclosure stays wider than opt.tol.
Enclosure rs_integral(const RepFunc& f, const RepFunc& g, const Options& opt = {});

struct Reduction {
  double value = 0.0;
  double error_bound = 0.0;
};

/// int f g_c' dt + sum f(t_k) sigma_{t_k}(g), for f continuous at every
/// jump of g.
Reduction rs_reduce(const RepFunc& f, const RepFunc& g, const Options& opt = {});

struct ByParts {
  double lhs = 0.0;  // int f dg + int g df
  double rhs = 0.0;  // f(b) g(b) - f(a) g(a)
  double bound = 0.0;
};

ByParts rs_by_parts(const RepFunc& f, const RepFunc& g, const Options& opt = {});

}  // namespace saltus
