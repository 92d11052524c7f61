#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "saltus/funcrep.hpp"

namespace saltus {

/// Which solution theory applies to the coefficient antiderivatives.
/// A: every p_k continuous (absolutely continuous pieces).
/// CDelta: p_1 without overrides (regulated), p_k of bounded variation.
/// C: p_1 with overrides, some p_k (k >= 2) discontinuous.
/// D: p_1 with overrides, every p_k (k >= 2) continuous.
enum class ConditionClass { A, C, CDelta, D };

const char* to_string(ConditionClass c) noexcept;

struct CoefficientSet {
  int n = 2;
  std::vector<RepFunc> p;  // p_1 .. p_{n+1}
  ConditionClass condition_class = ConditionClass::A;
};

/// Validates order, count and domains and detects the condition class.
/// Jump series are rejected with UnsupportedSeries.
CoefficientSet make_coefficients(std::vector<RepFunc> p);

/// Lower-triangular matrix of functions with indices lo..hi in both slots.
class TriMatrix {
 public:
  TriMatrix() = default;
  TriMatrix(int lo, int hi, double a, double b);

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  /// Entries above the diagonal are the zero function.
  const RepFunc& operator()(int i, int k) const;
  RepFunc& at(int i, int k);
  /// Point values with the given side: -1 left limit, 0 value, +1 right limit.
  std::vector<std::vector<double>> values(double t, int side) const;

 private:
  std::size_t index(int i, int k) const;
  int lo_ = 1;
  int hi_ = 0;
  std::vector<RepFunc> entries_;
  std::vector<RepFunc> zero_;
};

/// H of the quasi-differential reduction, 1-based; h_{n+1,n+1} = h_nn.
struct HMatrix {
  int n = 2;
  TriMatrix h;
  /// Tabulation grid shared by every entry.
  std::vector<double> grid;
};

/// Entries tabulated as cubic Hermite pieces on the union of the
/// coefficient points and a uniform grid of spacing (b - a) / 2048.
HMatrix build_H(const CoefficientSet& coeffs, const Options& opt = {});

/// The 0-based (n+1)x(n+1) matrix P: diagonal h_{k+1,k+1}/h_kk, the rest
/// from the Gauss elimination recursion. SingularPivot if some h_kk <= 0.
TriMatrix build_P(const HMatrix& H);

/// Max over k and j of the residual of the linear systems that define the
/// off-diagonal row k of P, sampled at `samples` points.
double p_residual(const HMatrix& H, const TriMatrix& P, int samples = 20);

struct QdeSystem {
  int n = 2;
  double a = 0.0;
  double b = 1.0;
  HMatrix H;
  TriMatrix P;
  std::vector<std::vector<RepFunc>> A;  // n x n, 0-based
  std::vector<RepFunc> F;
  std::vector<RepFunc> h0;  // (0, ..., 0, h_n0)
  std::vector<double> xi;
  /// Interior discontinuities of the coefficients.
  std::vector<double> events;
  /// Points where the integrator restarts: a, b, events and every
  /// breakpoint of the coefficients.
  std::vector<double> restarts;
};

/// A per the quasi-derivative stencil, h_n0 = (*) int h_nn dp_{n+1},
/// F = A h0 and xi = H(a) gamma.
QdeSystem assemble_system(const CoefficientSet& coeffs, const HMatrix& H, const TriMatrix& P,
                          const std::vector<double>& gamma, const Options& opt = {});

/// build_H, build_P and assemble_system in one call.
QdeSystem build_system(const CoefficientSet& coeffs, const std::vector<double>& gamma, const Options& opt = {});

struct Trajectory {
  std::vector<double> grid;
  /// -1 left limit row, +1 right limit row (events only), 0 otherwise.
  std::vector<int> side;
  std::vector<std::vector<double>> y;
  /// (x, x', ..., x^(n-1)) recovered as H^{-1}(y + h0).
  std::vector<std::vector<double>> x_derivs;
  std::vector<double> events;
  long steps = 0;

  /// Row index at t with the given side, or -1.
  long find(double t, int side = 0) const;
  void write_csv(std::ostream& os) const;
};

/// Integrates y' = A y + F with an adaptive Dormand-Prince 5(4) pair,
/// restarting at every restart point. With empty `times` the grid holds
/// the accepted steps; otherwise the requested times. Events always get a
/// left and a right row. StepFailure on step size underflow.
Trajectory solve_cauchy(const QdeSystem& sys, double tol = 1e-8, const std::vector<double>& times = {});

/// (x, x', ..., x^(n-1)) from y by forward substitution.
std::vector<double> recover(const QdeSystem& sys, double t, int side, const std::vector<double>& y);

struct DeltaRow {
  double eps = 0.0;
  double deviation = 0.0;
  double argmax = 0.0;
};

struct DeltaReport {
  std::vector<double> events;
  std::vector<DeltaRow> rows;
};

/// For each eps, mollifies every p_k, solves the classical problem and
/// reports sup |eps_n x_eps - eps_n x| on a uniform grid of `samples`
/// points away from the eps-neighbourhoods of the events. ConditionViolation
/// unless the class is A or CDelta.
DeltaReport delta_correctness(const CoefficientSet& coeffs, const std::vector<double>& gamma,
                              const std::vector<double>& eps_grid, double tol = 1e-8, int samples = 1001,
                              const Options& opt = {});

struct OdeProblem {
  CoefficientSet coeffs;
  std::vector<double> gamma;
  double tol = 1e-8;
};

/// {"n": int, "domain": [a, b], "p": [n + 1 function documents],
///  "gamma": [n reals], "tol": real}.
OdeProblem parse_ode_problem(const nlohmann::json& doc);

}  // namespace saltus
