#pragma once

#include "condmv/core.hpp"

#include <cstdint>

namespace condmv {

struct SchedulePoint {
  double n = 0.0;
  int d = 1;
  double r = 0.5;
  double C = 1.0;
  double h = 0.0;
  double epsilon = 0.0;
};

/// h = ((1/4) log n)^(-r / (d r + 4)),  epsilon = h^(2/r) sqrt(C).
/// The rate this buys is logarithmic in n.
SchedulePoint schedule(double n, int d, double r = 0.5, double C = 1.0);

/// C sqrt(k) [ exp(C / (h^d eps^2)) / (sqrt(n h^d) eps) + h + eps^(r/2) ].
/// Returns +inf when the exponential overflows.
double rate_bound(double h, double epsilon, double n, int d, double k, double r, double C);

struct RateGrid {
  double h_lo = 1e-3;
  double h_hi = 10.0;
  double eps_lo = 1e-4;
  double eps_hi = 10.0;
  int h_points = 121;
  int eps_points = 121;
};

struct RateOptimum {
  double h = 0.0;
  double epsilon = 0.0;
  double value = 0.0;
  bool interior = false;  // false when the argmin sits on the grid edge
};

/// Argmin of rate_bound over a log-spaced (h, epsilon) grid.
RateOptimum optimize_rate(double n, int d, double k, double r, double C, const RateGrid& grid = {});

}  // namespace condmv
