#pragma once

// Reference computations written independently of the library code paths.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double normal_pdf(double x, double mean = 0.0, double sd = 1.0) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Composite Simpson on [a, b] with an even number of intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Plain trapezoid, used where the library uses something else.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int points) {
  const double h = (b - a) / (points - 1);
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < points - 1; ++i) s += f(a + i * h);
  return s * h;
}

/// Integral of (p(x - a) / p(x))^4 p(x) for p = N(0, sd^2).
inline double d4_shift_quadrature(double a, double sd) {
  auto f = [&](double x) {
    const double r = normal_pdf(x - a, 0.0, sd) / normal_pdf(x, 0.0, sd);
    return r * r * r * r * normal_pdf(x, 0.0, sd);
  };
  const double c = 4.0 * a;  // the integrand peaks near x = 4a
  return simpson(f, c - 20.0 * sd, c + 20.0 * sd, 40000);
}

}  // namespace oracle
