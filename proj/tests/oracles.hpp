#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's integration, variation or ODE code.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double central_difference(const std::function<double(double)>& f, double t, double h = 1e-5) {
  return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h);
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Composite 5-point Gauss-Legendre rule on n equal panels.
inline double gauss5(const std::function<double(double)>& f, double a, double b, int n) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  const double h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = a + (i + 0.5) * h;
    for (int k = 0; k < 5; ++k) s += w[k] * f(m + 0.5 * h * x[k]);
  }
  return s * 0.5 * h;
}

struct Jump {
  double t;
  double left;
  double right;
};

/// f_d(t) straight from the jump-sum definition.
inline double jump_function(const std::vector<Jump>& jumps, double a, double t) {
  if (t <= a) return 0.0;
  double s = 0.0;
  for (const auto& j : jumps) {
    if (j.t < t) s += j.left + j.right;
    if (j.t == t) s += j.left;
  }
  return s;
}

/// sum |f(t_k) - f(t_{k-1})| over the given points.
inline double partition_sum(const std::function<double(double)>& f, const std::vector<double>& pts) {
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += std::abs(f(pts[i]) - f(pts[i - 1]));
  return s;
}

/// Fixed-step classical RK4 for y' = F(t, y).
inline std::vector<double> rk4(const std::function<std::vector<double>(double, const std::vector<double>&)>& F,
                               std::vector<double> y, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const auto k1 = F(t, y);
    const auto k2 = F(t + h / 2, axpy(y, h / 2, k1));
    const auto k3 = F(t + h / 2, axpy(y, h / 2, k2));
    const auto k4 = F(t + h, axpy(y, h, k3));
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return y;
}

}  // namespace oracle
