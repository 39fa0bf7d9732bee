#include "condmv/divergences.hpp"
#include "condmv/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace condmv;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

DiscreteDistribution dist(std::initializer_list<double> v) { return DiscreteDistribution(vec(v)); }

Vector random_simplex(std::mt19937_64& gen, Index k, bool full_support = true) {
  std::exponential_distribution<double> ex;
  Vector w(k);
  for (auto& c : w) c = ex(gen) + (full_support ? 1e-3 : 0.0);
  return DiscreteDistribution::from_weights(w).probabilities();
}

Matrix random_stochastic(std::mt19937_64& gen, Index rows, Index cols) {
  Matrix M(rows, cols);
  for (Index c = 0; c < cols; ++c) M.col(c) = random_simplex(gen, rows);
  return M;
}

double gaussian_kl_1d(double m1, double s1, double m2, double s2) {
  return std::log(s2 / s1) + (s1 * s1 + (m1 - m2) * (m1 - m2)) / (2 * s2 * s2) - 0.5;
}

GaussianLaw normal1(double mean, double var) { return GaussianLaw(Vector::Constant(1, mean), Matrix::Constant(1, 1, var)); }

ParticleEnsemble sample_normal(double mean, Index n, std::uint64_t seed) {
  const CounterRng rng(seed);
  ParticleEnsemble e(n, 1, 1);
  for (Index k = 0; k < n; ++k)
    e.positions()(k, 0) = mean + rng.normal({static_cast<std::uint64_t>(k), 0, 0, 0, Stream::auxiliary});
  return e;
}

}  // namespace

TEST_CASE("total variation examples") {
  CHECK(tv(dist({0.3, 0.7}), dist({0.3, 0.7})) == 0.0);
  CHECK(tv(dist({1, 0}), dist({0, 1})) == 2.0);
  CHECK(tv(dist({0.6, 0.4}), dist({0.5, 0.5})) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("relative entropy, chi square and p-divergence examples") {
  const auto a = dist({1, 0}), b = dist({0.5, 0.5});
  CHECK(kl(a, b) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(chi2(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d_p(a, b, 4.0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(kl(dist({0, 1}), dist({1, 0})) == std::numeric_limits<double>::infinity());
  CHECK(chi2(dist({0, 1}), dist({1, 0})) == std::numeric_limits<double>::infinity());
  CHECK(d_p(dist({0, 1}), dist({1, 0}), 4.0) == std::numeric_limits<double>::infinity());
  const auto c = dist({0.2, 0.3, 0.5});
  CHECK(kl(c, c) == 0.0);
  CHECK(chi2(c, c) == doctest::Approx(0.0).epsilon(1e-15));
  for (double p : {1.0, 2.0, 4.0, 7.5}) CHECK(d_p(c, c, p) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("hand-checked Pinsker pair") {
  const auto a = dist({0.9, 0.1}), b = dist({0.5, 0.5});
  const double expect = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(tv(a, b) == doctest::Approx(0.8));
  CHECK(kl(a, b) == doctest::Approx(expect).epsilon(1e-15));
  // Published rounding of the same value.
  CHECK(std::abs(kl(a, b) - 0.36802) < 1e-4);
  CHECK(2 * kl(a, b) >= tv(a, b) * tv(a, b));
}

TEST_CASE("alphabet and validation errors") {
  try {
    tv(dist({0.5, 0.5}), dist({0.2, 0.3, 0.5}));
    FAIL("expected alphabet_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::alphabet_mismatch);
  }
  CHECK_THROWS_AS(dist({0.5, 0.6}), Error);
  CHECK_THROWS_AS(dist({1.5, -0.5}), Error);
  CHECK_THROWS_AS(d_p(dist({0.5, 0.5}), dist({0.5, 0.5}), 0.5), Error);
  const auto w = DiscreteDistribution::from_weights(vec({1, 2, 3, 4}));
  CHECK(w[3] == doctest::Approx(0.4));
  CHECK(w.probabilities().sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gaussian closed forms") {
  const auto p = normal1(0.0, 1.0);
  CHECK(gaussian_kl(p, p) == 0.0);
  CHECK(gaussian_renyi_D(p, p, 4.0) == 1.0);
  const double h = 0.01;
  const double closed = 0.5 * (std::log(1.0 + h) + 1.0 / (1.0 + h) - 1.0);
  CHECK(gaussian_kl(p, normal1(0.0, 1.0 + h)) == doctest::Approx(closed).epsilon(1e-12));
  // Published value, good to about 1e-7.
  CHECK(std::abs(gaussian_kl(p, normal1(0.0, 1.0 + h)) - 2.4752e-5) < 1e-7);
  const double s = std::sqrt(1.0 + h);
  const double quad = oracle::simpson(
      [&](double x) {
        const double a = oracle::normal_pdf(x), b = oracle::normal_pdf(x / s) / s;
        return a * std::log(a / b);
      },
      -20, 20, 40000);
  CHECK(gaussian_kl(p, normal1(0.0, 1.0 + h)) == doctest::Approx(quad).epsilon(1e-8));
  CHECK(gaussian_kl(normal1(1.0, 2.0), normal1(-0.5, 0.5)) ==
        doctest::Approx(gaussian_kl_1d(1.0, std::sqrt(2.0), -0.5, std::sqrt(0.5))).epsilon(1e-14));
  const double d4 = gaussian_renyi_D(normal1(0.5, 1.0), p, 4.0);
  CHECK(d4 == doctest::Approx(std::exp(1.5)).epsilon(1e-14));
  CHECK(std::abs(d4 - 4.4817) < 1e-4);
  CHECK(std::abs(d4 - oracle::d4_shift_quadrature(0.5, 1.0)) < 1e-6);
  CHECK_THROWS_AS(gaussian_renyi_D(normal1(0.0, 1.0), normal1(0.0, 2.0), 4.0), Error);
}

TEST_CASE("property: gaussian D4 matches quadrature over random pairs") {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> shift(-0.6, 0.6), sd(0.5, 3.0);
  for (int t = 0; t < 100; ++t) {
    const double a = shift(gen), s = sd(gen);
    CAPTURE(a);
    CAPTURE(s);
    const double closed = gaussian_renyi_D(normal1(a, s * s), normal1(0.0, s * s), 4.0);
    CHECK(std::abs(closed - oracle::d4_shift_quadrature(a, s)) < 1e-6);
  }
}

TEST_CASE("mollification entropy") {
  const auto g = make_kernel("gaussian", 1);
  const auto p = Density1D::normal(0.0, 1.0);
  CHECK(mollification_entropy(p, g, 1e-6) < 1e-9);
  CHECK(mollification_entropy(p, g, 1e-6) >= 0.0);
  for (double h : {0.1, 0.01}) {
    CAPTURE(h);
    const double closed = gaussian_kl(normal1(0.0, 1.0), normal1(0.0, 1.0 + h));
    CHECK(std::abs(mollification_entropy(p, g, h) - closed) < 1e-8);
  }
  for (double h : {1e-2, 1e-3}) {
    CAPTURE(h);
    CHECK(mollification_entropy(p, g, h) / (h * h) == doctest::Approx(0.25).epsilon(0.05));
  }
  // A shifted, wider normal: the same identity with variance s^2 + h.
  const auto q = Density1D::normal(3.0, 2.0);
  const double closed = gaussian_kl(normal1(3.0, 4.0), normal1(3.0, 4.0 + 0.05));
  CHECK(std::abs(mollification_entropy(q, g, 0.05) - closed) < 1e-8);
}

TEST_CASE("mollification entropy of a mixture against direct quadrature") {
  const auto mix = Density1D::normal_mixture(0.3, -2.0, 0.5, 1.5, 1.0);
  const double h = 0.05;
  auto pdf = [](double x) {
    return 0.3 * oracle::normal_pdf((x + 2.0) / 0.5) / 0.5 + 0.7 * oracle::normal_pdf(x - 1.5);
  };
  // Mixture of normals convolved with N(0, h) is the mixture with inflated variances.
  auto smooth = [h](double x) {
    const double s1 = std::sqrt(0.25 + h), s2 = std::sqrt(1.0 + h);
    return 0.3 * oracle::normal_pdf((x + 2.0) / s1) / s1 + 0.7 * oracle::normal_pdf((x - 1.5) / s2) / s2;
  };
  const double expect = oracle::simpson([&](double x) { return pdf(x) * std::log(pdf(x) / smooth(x)); }, -12, 14, 60000);
  CHECK(std::abs(mollification_entropy(mix, make_kernel("gaussian", 1), h) - expect) < 1e-8);
}

TEST_CASE("mollification entropy rejects unusable inputs") {
  MollificationOptions tight;
  tight.max_half_width = 2.0;
  tight.initial_half_width = 1.0;
  try {
    mollification_entropy(Density1D::normal(0.0, 1.0), make_kernel("gaussian", 1), 0.1, tight);
    FAIL("expected widen_domain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::widen_domain);
  }
  CHECK_THROWS_AS(mollification_entropy(Density1D::normal(0.0, 1.0), make_kernel("gaussian", 2), 0.1), Error);
}

TEST_CASE("property: mollification entropy is monotone in h") {
  const auto p = Density1D::normal(0.0, 1.0);
  for (const char* id : {"gaussian", "epanechnikov", "uniform-ball"}) {
    const std::string name = id;
    CAPTURE(name);
    const auto k = make_kernel(id, 1);
    double prev = std::numeric_limits<double>::infinity();
    for (double h : {1.0, 0.3, 0.1, 0.03, 0.01, 0.003}) {
      const double v = mollification_entropy(p, k, h);
      CHECK(v >= 0.0);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("histogram TV") {
  const auto a = sample_normal(0.0, 100000, 1);
  const auto b = sample_normal(3.0, 100000, 2);
  const std::vector<HistogramAxis> axis{{-8.0, 11.0, 190}};
  CHECK(histogram_tv(a, a, {0, 0}, axis) == 0.0);
  const double analytic = 2.0 * (2.0 * oracle::normal_cdf(1.5) - 1.0);
  CHECK(std::abs(analytic - 1.7335) < 1e-3);
  CHECK(histogram_tv(a, b, {0, 0}, axis) == doctest::Approx(analytic).epsilon(0.05));
  const auto c = sample_normal(0.0, 100000, 3);
  const double noise = histogram_tv(a, c, {0, -1}, {{-10, 10, 50}});
  CHECK(noise > 0.0);
  CHECK(noise < 0.05);
  CHECK_THROWS_AS(histogram_tv(a, b, {0, 0}, {{-1, 1, 10}}), Error);
  CHECK_THROWS_AS(histogram_tv(ParticleEnsemble(0, 1, 1), a, {0, 0}, axis), Error);
}

TEST_CASE("histogram binning") {
  Histogram h({{0.0, 1.0, 4}, {0.0, 2.0, 2}});
  const double in[2] = {0.3, 1.5}, edge[2] = {1.0, 2.0}, out[2] = {1.2, 0.5};
  CHECK(h.add(in));
  CHECK(h.add(edge));
  CHECK_FALSE(h.add(out));
  CHECK(h.total() == 2.0);
  const Vector p = h.probabilities();
  CHECK(p.size() == 8);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p.maxCoeff() == 0.5);
}

TEST_CASE("inequality suite") {
  InequalityOptions opt;
  opt.seed = 9;
  const auto report = inequality_suite(10000, opt);
  CHECK(report.trials == 10000);
  CHECK(report.violations() == 0);
  CHECK(report.records.size() >= 10000 * 8);
  opt.workers = 3;
  const auto parallel = inequality_suite(200, opt);
  opt.workers = 1;
  const auto serial = inequality_suite(200, opt);
  REQUIRE(parallel.records.size() == serial.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    CHECK(parallel.records[i].quantity == serial.records[i].quantity);
    CHECK(parallel.records[i].lhs == serial.records[i].lhs);
  }
  const auto path = std::filesystem::temp_directory_path() / "condmv_ineq.csv";
  serial.write_csv(path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "trial,quantity,lhs,rhs,pass");
  std::filesystem::remove(path);
}

TEST_CASE("property: divergences are nonnegative and vanish on equal arguments") {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 500; ++t) {
    const Index k = 2 + static_cast<Index>(gen() % 20);
    const Vector a = random_simplex(gen, k), b = random_simplex(gen, k);
    CHECK(tv(a, b) >= 0.0);
    CHECK(tv(a, b) <= 2.0);
    CHECK(kl(a, b) > 0.0);
    CHECK(chi2(a, b) > 0.0);
    CHECK(d_p(a, b, 4.0) > 1.0);
    CHECK(tv(a, a) == 0.0);
    CHECK(kl(a, a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(d_p(a, a, 3.0) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("property: tv is a metric") {
  std::mt19937_64 gen(37);
  for (int t = 0; t < 500; ++t) {
    const Index k = 2 + static_cast<Index>(gen() % 20);
    const Vector a = random_simplex(gen, k, false), b = random_simplex(gen, k, false), c = random_simplex(gen, k, false);
    CHECK(tv(a, b) == tv(b, a));
    CHECK(tv(a, c) <= tv(a, b) + tv(b, c) + 1e-15);
  }
}

TEST_CASE("property: data processing under random stochastic maps") {
  std::mt19937_64 gen(41);
  for (int t = 0; t < 500; ++t) {
    const Index k = 2 + static_cast<Index>(gen() % 16), r = 2 + static_cast<Index>(gen() % 16);
    const Vector a = random_simplex(gen, k), b = random_simplex(gen, k);
    const Matrix M = random_stochastic(gen, r, k);
    const Vector Ma = M * a, Mb = M * b;
    const double tol = 1e-12;
    CHECK(tv(Ma, Mb) <= tv(a, b) + tol);
    CHECK(kl(Ma, Mb) <= kl(a, b) * (1 + tol) + tol);
    CHECK(chi2(Ma, Mb) <= chi2(a, b) * (1 + tol) + tol);
    for (double p : {2.0, 4.0}) CHECK(d_p(Ma, Mb, p) <= d_p(a, b, p) * (1 + tol));
    CHECK(tv(Ma, Ma) == 0.0);
  }
}
