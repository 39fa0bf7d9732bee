#include "condmv/schedule.hpp"

#include <doctest.h>

#include <cmath>

using namespace condmv;

TEST_CASE("schedule at n = e^4") {
  for (double r : {0.1, 0.5, 0.9}) {
    const auto s = schedule(std::exp(4.0), 1, r, 1.0);
    CHECK(s.h == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.epsilon == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("schedule at n = 1e6") {
  const auto s = schedule(1e6, 1);
  const double base = std::log(1e6) / 4.0;
  CHECK(base == doctest::Approx(3.4539).epsilon(1e-4));
  CHECK(s.h == doctest::Approx(std::pow(base, -1.0 / 9.0)).epsilon(1e-15));
  CHECK(std::abs(s.h - 0.8714) < 1e-4);
  CHECK(s.epsilon == doctest::Approx(std::pow(s.h, 4.0)).epsilon(1e-14));
  CHECK(std::abs(s.epsilon - 0.5766) < 5e-4);
  const auto c4 = schedule(1e6, 1, 0.5, 4.0);
  CHECK(c4.epsilon == doctest::Approx(2.0 * s.epsilon));
  CHECK(schedule(1e6, 2).h == doctest::Approx(std::pow(base, -0.5 / 5.0)));
}

TEST_CASE("schedule errors") {
  for (double n : {1.0, 0.5, -3.0}) CHECK_THROWS_AS(schedule(n, 1), Error);
  CHECK_THROWS_AS(schedule(100, 1, 0.0), Error);
  CHECK_THROWS_AS(schedule(100, 1, 1.0), Error);
  CHECK_THROWS_AS(schedule(100, 1, 0.5, 0.0), Error);
  CHECK_THROWS_AS(schedule(100, 0), Error);
}

TEST_CASE("rate bound grows with h and scales with sqrt k") {
  double prev = 0.0;
  for (double h : {1.0, 10.0, 100.0}) {
    const double v = rate_bound(h, 0.5, 1e6, 1, 1, 0.5, 1.0);
    CHECK(v > prev);
    prev = v;
  }
  const double k1 = rate_bound(0.3, 0.2, 1e5, 1, 1, 0.5, 0.7);
  CHECK(rate_bound(0.3, 0.2, 1e5, 1, 4, 0.5, 0.7) == doctest::Approx(2.0 * k1).epsilon(1e-15));
  const double h = 0.3, e = 0.2, n = 1e5, C = 0.7;
  const double expect = C * (std::exp(C / (h * e * e)) / (std::sqrt(n * h) * e) + h + std::pow(e, 0.25));
  CHECK(k1 == doctest::Approx(expect).epsilon(1e-14));
  CHECK(rate_bound(1e-3, 1e-4, 1e6, 1, 1, 0.5, 1.0) == std::numeric_limits<double>::infinity());
}

TEST_CASE("property: rate bound is strictly decreasing in n") {
  for (double h : {0.2, 1.0, 3.0})
    for (double e : {0.3, 1.0}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double n = 10; n <= 1e12; n *= 10) {
        const double v = rate_bound(h, e, n, 1, 1, 0.5, 1.0);
        CHECK(v < prev);
        prev = v;
      }
    }
}

TEST_CASE("property: the schedule point gives a finite bound") {
  for (double C : {1e-3, 0.1, 0.5, 1.0})
    for (int d : {1, 2})
      for (double r : {0.2, 0.5, 0.8})
        for (double n = 3; n < 1e15; n *= 7) {
          const auto s = schedule(n, d, r, C);
          CHECK(std::isfinite(rate_bound(s.h, s.epsilon, n, d, 1, r, C)));
        }
}

TEST_CASE("property: the schedule reproduces the logarithmic rate up to a bounded factor") {
  std::vector<double> ratios;
  for (double n : {1e3, 1e6, 1e9}) {
    const auto s = schedule(n, 1);
    ratios.push_back(rate_bound(s.h, s.epsilon, n, 1, 1, 0.5, 1.0) / std::pow(std::log(n), -0.5 / 4.5));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo < 2.0);
}

TEST_CASE("grid optimizer beats the schedule point") {
  RateGrid grid{1e-2, 1.0, 1e-4, 1.0, 50, 50};
  const auto opt = optimize_rate(1e6, 1, 1, 0.5, 0.1, grid);
  const auto s = schedule(1e6, 1, 0.5, 0.1);
  const double at_schedule = rate_bound(s.h, s.epsilon, 1e6, 1, 1, 0.5, 0.1);
  CHECK(std::isfinite(opt.value));
  CHECK(std::isfinite(at_schedule));
  CHECK(opt.value <= at_schedule);
  CHECK(opt.value == rate_bound(opt.h, opt.epsilon, 1e6, 1, 1, 0.5, 0.1));
  // Brute-force check over the same grid.
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const double h = std::exp(std::log(1e-2) + i * (std::log(1.0) - std::log(1e-2)) / 49);
      const double e = std::exp(std::log(1e-4) + j * (std::log(1.0) - std::log(1e-4)) / 49);
      best = std::min(best, rate_bound(h, e, 1e6, 1, 1, 0.5, 0.1));
    }
  CHECK(opt.value == doctest::Approx(best).epsilon(1e-12));
  CHECK_THROWS_AS(optimize_rate(1e6, 1, 1, 0.5, 0.1, RateGrid{1, 0.5, 1e-4, 1, 10, 10}), Error);
}
