#include "condmv/kernels.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace condmv;

namespace {

Vector v1(double x) {
  Vector z(1);
  z[0] = x;
  return z;
}

}  // namespace

TEST_CASE("gaussian kernel origin values") {
  const auto g = make_kernel("gaussian", 1);
  CHECK(ScaledKernel(g, 1.0)(v1(0.0)) == doctest::Approx(0.3989423).epsilon(1e-7));
  CHECK(ScaledKernel(g, 0.25)(v1(0.0)) == doctest::Approx(0.7978846).epsilon(1e-7));
  CHECK(ScaledKernel(g, 0.25).at_origin() == doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi)));
}

TEST_CASE("epanechnikov vanishes outside its support") {
  const auto e = make_kernel("epanechnikov", 1);
  CHECK(ScaledKernel(e, 1.0)(v1(2.0)) == 0.0);
  CHECK(ScaledKernel(e, 1.0)(v1(0.5)) == doctest::Approx(0.75 * (1.0 - 0.25)));
}

TEST_CASE("scaled gaussian has second moment h") {
  const ScaledKernel k(make_kernel("gaussian", 1), 0.04);
  const double m2 = oracle::simpson([&](double z) { return k(v1(z)) * z * z; }, -3.0, 3.0, 20000);
  CHECK(m2 == doctest::Approx(0.04).epsilon(1e-6));
}

TEST_CASE("second moments of the shipped kernels") {
  CHECK(std::abs(second_moment(make_kernel("gaussian", 1)) - 1.0) < 1e-10);
  CHECK(std::abs(second_moment(make_kernel("epanechnikov", 1)) - 0.2) < 1e-10);
  CHECK(std::abs(second_moment(make_kernel("uniform-ball", 1)) - 1.0 / 3.0) < 1e-10);
  // Independent check by exact algebra: int 3/4 (1 - z^2) z^2 = 3/4 (2/3 - 2/5).
  CHECK(0.75 * (2.0 / 3.0 - 2.0 / 5.0) == doctest::Approx(0.2));
}

TEST_CASE("second moments in two dimensions") {
  CHECK(std::abs(second_moment(make_kernel("gaussian", 2)) - 2.0) < 1e-10);
  CHECK(std::abs(second_moment(make_kernel("epanechnikov", 2)) - 2.0 / 6.0) < 1e-10);
  CHECK(std::abs(second_moment(make_kernel("uniform-ball", 2)) - 0.5) < 1e-10);
}

TEST_CASE("assumption K passes for the shipped kernels in d = 1") {
  for (const char* id : {"gaussian", "epanechnikov", "uniform-ball"}) {
    const std::string name = id;
    CAPTURE(name);
    const auto r = check_assumption_K(make_kernel(id, 1));
    CHECK(r.all_pass());
    CHECK(std::isfinite(r.exp_moment.value));
  }
  const auto g = check_assumption_K(make_kernel("gaussian", 1));
  CHECK(g.exp_moment.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
  const double oracle_moment =
      oracle::simpson([](double z) { return oracle::normal_pdf(z) * std::exp(z * z / 4.0); }, -30, 30, 60000);
  CHECK(g.exp_moment.value == doctest::Approx(oracle_moment).epsilon(1e-7));
}

TEST_CASE("assumption K passes for the shipped kernels in d = 2") {
  for (const char* id : {"gaussian", "epanechnikov", "uniform-ball"}) {
    const std::string name = id;
    CAPTURE(name);
    const auto r = check_assumption_K(make_kernel(id, 2));
    CHECK(r.all_pass());
    CHECK(r.mass.value == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("shifted gaussian fails the mean check") {
  const auto k = custom_kernel(
      "shifted", 1, [](const Vector& z) { return oracle::normal_pdf(z[0], 1.0); },
      std::numeric_limits<double>::infinity(), oracle::normal_pdf(0.0));
  const auto r = check_assumption_K(k);
  CHECK_FALSE(r.mean.pass);
  CHECK(r.mean.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(r.symmetric.pass);
  CHECK(r.mass.pass);
}

TEST_CASE("kernel errors") {
  CHECK_THROWS_AS(make_kernel("triangle", 1), Error);
  CHECK_THROWS_AS(ScaledKernel(make_kernel("gaussian", 1), 0.0), Error);
  CHECK_THROWS_AS(ScaledKernel(make_kernel("gaussian", 1), -1.0), Error);
  try {
    check_assumption_K(make_kernel("gaussian", 3));
    FAIL("expected unsupported_dimension");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported_dimension);
  }
}

TEST_CASE("property: scaled kernels have unit mass and zero mean") {
  for (const char* id : {"gaussian", "epanechnikov", "uniform-ball"}) {
    for (double h : {1.0, 0.1, 0.01}) {
      const std::string name = id;
      CAPTURE(name);
      CAPTURE(h);
      const ScaledKernel k(make_kernel(id, 1), h);
      const double L = std::sqrt(h) * (make_kernel(id, 1).compact() ? 1.0 : 12.0);
      // Nodes on +-sqrt(h) so the support edge is a grid point.
      const double mass = oracle::trapezoid([&](double z) { return k(v1(z)); }, -L, L, 20001);
      const double mean = oracle::trapezoid([&](double z) { return k(v1(z)) * z; }, -L, L, 20001);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(std::abs(mean) < 1e-9);
    }
  }
}

TEST_CASE("property: scaling identity holds pointwise") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (const char* id : {"gaussian", "epanechnikov", "uniform-ball"}) {
    for (int d : {1, 2}) {
      const auto base = make_kernel(id, d);
      for (double h : {2.0, 0.3, 0.01}) {
        const ScaledKernel k(base, h);
        for (int t = 0; t < 200; ++t) {
          Vector z(d);
          for (auto& c : z) c = nd(gen) * std::sqrt(h);
          const double expect = std::pow(h, -d / 2.0) * base.density(z / std::sqrt(h));
          CHECK(eval_scaled(k, z) == doctest::Approx(expect).epsilon(1e-14));
          const Array r2 = Array::Constant(1, z.squaredNorm());
          CHECK(k.on_squared_distance(r2)[0] == doctest::Approx(expect).epsilon(1e-13));
        }
      }
    }
  }
}

TEST_CASE("property: compact kernels are exactly zero outside the scaled support") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(1.0 + 1e-12, 5.0);
  for (const char* id : {"epanechnikov", "uniform-ball"}) {
    const ScaledKernel k(make_kernel(id, 1), 0.09);
    for (int t = 0; t < 500; ++t) {
      const double z = u(gen) * k.scaled_radius();
      CHECK(k(v1(z)) == 0.0);
      CHECK(k(v1(-z)) == 0.0);
    }
  }
}

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 / 3.0 * std::numbers::pi));
}
