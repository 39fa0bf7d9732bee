#include "condmv/schedule.hpp"

#include <cmath>
#include <limits>

namespace condmv {

namespace {

void check_common(double n, int d, double r, double C) {
  require(std::isfinite(n) && n > 1.0, ErrorCode::invalid_parameter, "n must exceed 1");
  require(d >= 1, ErrorCode::invalid_parameter, "d must be at least 1");
  require(r > 0.0 && r < 1.0, ErrorCode::invalid_parameter, "r must lie in (0, 1)");
  require(C > 0.0 && std::isfinite(C), ErrorCode::invalid_parameter, "C must be positive");
}

}  // namespace

SchedulePoint schedule(double n, int d, double r, double C) {
  check_common(n, d, r, C);
  SchedulePoint p{n, d, r, C, 0.0, 0.0};
  p.h = std::pow(0.25 * std::log(n), -r / (d * r + 4.0));
  p.epsilon = std::pow(p.h, 2.0 / r) * std::sqrt(C);
  return p;
}

double rate_bound(double h, double epsilon, double n, int d, double k, double r, double C) {
  check_common(n, d, r, C);
  require(h > 0.0 && epsilon > 0.0 && k >= 1.0, ErrorCode::invalid_parameter, "h, epsilon must be positive, k >= 1");
  const double hd = std::pow(h, d);
  const double exponent = C / (hd * epsilon * epsilon);
  const double growth = std::exp(exponent);
  if (!std::isfinite(growth)) return std::numeric_limits<double>::infinity();
  const double variance = growth / (std::sqrt(n * hd) * epsilon);
  return C * std::sqrt(k) * (variance + h + std::pow(epsilon, r / 2.0));
}

RateOptimum optimize_rate(double n, int d, double k, double r, double C, const RateGrid& grid) {
  require(grid.h_lo > 0.0 && grid.h_hi > grid.h_lo && grid.eps_lo > 0.0 && grid.eps_hi > grid.eps_lo &&
              grid.h_points >= 3 && grid.eps_points >= 3,
          ErrorCode::invalid_parameter, "invalid rate grid");
  auto at = [](double lo, double hi, int i, int count) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  };
  RateOptimum best;
  best.value = std::numeric_limits<double>::infinity();
  int bi = -1, bj = -1;
  for (int i = 0; i < grid.h_points; ++i) {
    const double h = at(grid.h_lo, grid.h_hi, i, grid.h_points);
    for (int j = 0; j < grid.eps_points; ++j) {
      const double eps = at(grid.eps_lo, grid.eps_hi, j, grid.eps_points);
      const double v = rate_bound(h, eps, n, d, k, r, C);
      if (v < best.value) {
        best = {h, eps, v, false};
        bi = i;
        bj = j;
      }
    }
  }
  require(bi >= 0, ErrorCode::invalid_parameter, "rate bound is infinite on the whole grid");
  best.interior = bi > 0 && bi < grid.h_points - 1 && bj > 0 && bj < grid.eps_points - 1;
  return best;
}

}  // namespace condmv
