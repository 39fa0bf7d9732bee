// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "condmv/divergences.hpp"
#include "condmv/harness.hpp"
#include "condmv/models.hpp"
#include "condmv/nwdrift.hpp"
#include "condmv/parallel.hpp"
#include "condmv/simulate.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace condmv;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(const char* id, const char* title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s  %s (%s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
  std::fflush(stdout);
}

ParticleEnsemble normal_cloud(Index n, int m, std::uint64_t seed) {
  const CounterRng rng(seed);
  ParticleEnsemble e(n, m, 1);
  for (Index k = 0; k < n; ++k)
    for (int j = 0; j < m; ++j)
      e.positions()(k, j) =
          rng.normal({static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(j), 0, 0, Stream::auxiliary});
  return e;
}

Outcome a1() {
  const auto start = Clock::now();
  const auto g = make_kernel("gaussian", 1);
  const auto p = Density1D::normal(0.0, 1.0);
  bool ok = true;
  double worst_abs = 0.0;
  for (double h : {0.1, 0.01}) {
    const double closed = 0.5 * (std::log1p(h) + 1.0 / (1.0 + h) - 1.0);
    const double err = std::abs(mollification_entropy(p, g, h) - closed);
    worst_abs = std::max(worst_abs, err);
    ok = ok && err <= 1e-8;
  }
  double r2 = 0, r3 = 0;
  for (double h : {1e-2, 1e-3}) {
    const double ratio = mollification_entropy(p, g, h) / (h * h / 4.0);
    (h == 1e-2 ? r2 : r3) = ratio;
    ok = ok && ratio >= 0.95 && ratio <= 1.05;
  }
  const double t = seconds_since(start);
  ok = ok && t < 1.0;
  return {ok, fmt("max |err| %.2e, ratio %.4f at 1e-2, %.4f at 1e-3, %.3fs", worst_abs, r2, r3, t)};
}

Outcome a2() {
  const auto start = Clock::now();
  InequalityOptions opt;
  opt.seed = 20240601;
  opt.max_alphabet = 32;
  opt.workers = default_workers();
  const auto report = inequality_suite(10000, opt);
  const double t = seconds_since(start);
  const auto v = report.violations();
  return {v == 0 && t < 10.0,
          fmt("%lld checks over %lld trials, %lld violations, %.2fs", static_cast<long long>(report.records.size()),
              static_cast<long long>(report.trials), static_cast<long long>(v), t)};
}

Outcome a3() {
  const auto start = Clock::now();
  ExperimentPlan plan;
  plan.base.model = "decoupled-oracle";
  plan.base.n = 100;
  plan.base.T = 1.0;
  plan.base.dt = 0.01;
  plan.base.kernel = "gaussian";
  plan.base.strategy = Strategy::naive;
  plan.schedule = {0.5, 1.0};
  plan.auto_h = plan.auto_epsilon = true;
  plan.n_values = {100, 1000, 10000};
  for (std::uint64_t s = 1; s <= 10; ++s) plan.seed_values.push_back(s);
  plan.comparisons = {Comparison::particle_vs_oracle};
  plan.oracle_copies = 100000;
  plan.histogram = {0, 0, 50, -15.0, 15.0};
  SweepOptions opt;
  opt.workers = default_workers();
  opt.auto_schedule = true;
  const auto rows = sweep(plan, opt);
  ConvergenceOptions copt;
  copt.min_seeds = 10;
  const auto summary = report_convergence(rows, copt);
  const auto& r = summary.rows;
  bool nonincreasing = true;
  for (std::size_t i = 1; i < r.size(); ++i)
    nonincreasing = nonincreasing && r[i].mean - r[i - 1].mean <= std::hypot(r[i].std_error, r[i - 1].std_error);
  const double gap = r.front().mean - r.back().mean;
  const double se = std::hypot(r.front().std_error, r.back().std_error);
  const double t = seconds_since(start);
  const bool ok = r.size() == 3 && nonincreasing && gap >= 2 * se && t <= 600.0;
  return {ok, fmt("TV %.4f+-%.4f, %.4f+-%.4f, %.4f+-%.4f at n=1e2,1e3,1e4; drop %.1f SE; %.0fs", r[0].mean,
                  r[0].std_error, r[1].mean, r[1].std_error, r[2].mean, r[2].std_error, se > 0 ? gap / se : 0.0, t)};
}

Outcome a4() {
  const auto start = Clock::now();
  const auto model = preset("frozen-independence");
  const DriftParams p{0.1, 1e-6, make_kernel("gaussian", 1)};
  const int j = 1;
  const auto& b = model.coefficient(0, j).eval;
  const std::vector<double> queries = {-1.0, -0.5, 0.0, 0.5, 1.0};
  auto rmse = [&](Index n) {
    double sq = 0.0;
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto nu = WeightedMeasure::empirical(init_ensemble(model, n, seed));
      for (double q : queries) {
        const double est = nw_block(Vector::Constant(1, q), j, b, nu, p, 1)[0];
        sq += est * est;
        ++count;
      }
    }
    return std::sqrt(sq / count);
  };
  const double small = rmse(1000), large = rmse(100000);
  const double t = seconds_since(start);
  return {large < 0.5 * small && t < 60.0, fmt("RMSE %.4e at n=1e3, %.4e at n=1e5, ratio %.3f, %.1fs", small, large,
                                               large / small, t)};
}

Outcome a5() {
  DriftParams p{0.05, 1e-6, make_kernel("epanechnikov", 1)};
  double worst = 0.0;
  for (const char* name : {"local-field", "decoupled-oracle"}) {
    const auto m = preset(name);
    for (Index n : {1000, 10000}) {
      const auto e = normal_cloud(n, 2, 7 + n);
      const Matrix naive = particle_drift(e, m, p, {Strategy::naive, 1});
      const Matrix cells = particle_drift(e, m, p, {Strategy::celllist, 1});
      worst = std::max(worst, (naive - cells).cwiseAbs().maxCoeff());
    }
  }
  const auto model = preset("decoupled-oracle");
  p.h = 0.01;
  const auto big = normal_cloud(100000, 2, 99);
  auto t0 = Clock::now();
  const Matrix cells = particle_drift(big, model, p, {Strategy::celllist, 1});
  const double t_cells = seconds_since(t0);
  t0 = Clock::now();
  const Matrix naive = particle_drift(big, model, p, {Strategy::naive, 1});
  const double t_naive = seconds_since(t0);
  worst = std::max(worst, (naive - cells).cwiseAbs().maxCoeff());
  return {worst <= 1e-12 && t_cells < t_naive,
          fmt("max |naive - celllist| %.2e; n=1e5 naive %.2fs, celllist %.3fs, speedup %.1fx", worst, t_naive,
              t_cells, t_naive / t_cells)};
}

Outcome a6() {
  const DriftParams base{0.1, 1.0, make_kernel("gaussian", 1)};
  const double k0 = ScaledKernel(base.kernel, base.h).at_origin();
  bool ok = true;
  std::string rates;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto e = normal_cloud(10000, 1, seed);
    double prev = 2.0;
    for (double f : {1e-1, 1e-2, 1e-3}) {
      DriftParams p = base;
      p.epsilon = f * k0;
      const double rate = floor_hit_rate(e, 0, p);
      ok = ok && rate <= prev;
      prev = rate;
      if (seed == 1) rates += fmt("%s%.4f", rates.empty() ? "" : ", ", rate);
    }
  }
  return {ok, "10 seeds; seed 1 rates " + rates};
}

Outcome a7() {
  const auto start = Clock::now();
  SimConfig c;
  c.model = "decoupled-oracle";
  c.n = 1000;
  c.T = 0.5;
  c.dt = 0.01;
  c.h = 0.1;
  c.epsilon = 1e-3;
  c.seed = 31;
  const auto model = preset(c.model);
  std::string ref;
  bool same = true;
  for (int w : {1, 2, 8}) {
    const auto bytes = snapshot_bytes(run(c, model, {w, false}).snapshots.back(), c.seed, 0);
    if (ref.empty()) ref = bytes;
    same = same && bytes == ref;
  }
  auto free_model = model;
  for (auto& coef : free_model.b) coef = {};
  c.record_times.clear();
  for (int s = 0; s <= 50; s += 5) c.record_times.push_back(s * c.dt);
  const auto small = run(c, free_model, {1, false});
  c.n = 2000;
  const auto large = run(c, free_model, {1, false});
  bool stable = small.snapshots.size() == large.snapshots.size();
  for (std::size_t i = 0; stable && i < small.snapshots.size(); ++i)
    stable = large.snapshots[i].positions().topRows(1000) == small.snapshots[i].positions();
  const double t = seconds_since(start);
  return {same && stable && t < 60.0,
          fmt("worker snapshots %s, prefix %s over %zu records, %.1fs", same ? "identical" : "differ",
              stable ? "identical" : "differs", small.snapshots.size(), t)};
}

Outcome a8() {
  const auto start = Clock::now();
  const GaussianLaw q(Vector::Zero(1), Matrix::Identity(1, 1));
  double worst = 0.0;
  for (double a : {0.0, 0.1, 0.5}) {
    const GaussianLaw p(Vector::Constant(1, a), Matrix::Identity(1, 1));
    worst = std::max(worst, std::abs(gaussian_renyi_D(p, q, 4.0) - oracle::d4_shift_quadrature(a, 1.0)));
  }
  const auto law = InitialLaw::from_gaussian(GaussianLaw::standard(1), 1);
  const auto r = check_assumption_R(law, 0.01, make_kernel("gaussian", 1));
  const bool finite = !r.r1.empty() && r.r1[0].finite && std::isfinite(r.r1[0].value);
  const double t = seconds_since(start);
  return {worst <= 1e-6 && finite && t < 5.0,
          fmt("max |closed - quadrature| %.2e, R.1 integral %.6f, %.2fs", worst, r.r1.empty() ? NAN : r.r1[0].value, t)};
}

}  // namespace

int main() {
  criterion("A1", "mollification entropy scaling", a1);
  criterion("A2", "information inequality suite", a2);
  criterion("A3", "propagation of chaos toward the oracle", a3);
  criterion("A4", "Nadaraya-Watson consistency", a4);
  criterion("A5", "strategy equivalence", a5);
  criterion("A6", "floor diagnostics monotone", a6);
  criterion("A7", "determinism and stream stability", a7);
  criterion("A8", "Gaussian D4 closed form", a8);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
