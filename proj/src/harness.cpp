#include "condmv/harness.hpp"
#include "condmv/schedule.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace condmv {

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {"run_id", "model",  "n",    "m",           "d",
                                                "h",      "epsilon", "dt",  "T",           "seed",
                                                "metric_name", "metric_value", "status", "config_digest",
                                                "content_hash"};
  return cols;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) std::fprintf(f, "%s%s", i ? "," : "", cols[i].c_str());
  std::fprintf(f, "\n");
  for (const auto& r : rows)
    std::fprintf(f, "%lld,%s,%lld,%d,%d,%.17g,%.17g,%.17g,%.17g,%llu,%s,%.17g,%s,%s,%s\n",
                 static_cast<long long>(r.run_id), r.model.c_str(), static_cast<long long>(r.n), r.m, r.d, r.h,
                 r.epsilon, r.dt, r.T, static_cast<unsigned long long>(r.seed), r.metric_name.c_str(),
                 r.metric_value, r.status.c_str(), r.config_digest.c_str(), r.content_hash.c_str());
  if (std::fclose(f) != 0) throw Error(ErrorCode::io, "failed writing " + path.string());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : result_columns())
    if (!col.count(name)) throw Error(ErrorCode::io, "results CSV lacks column " + name);

  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != header.size())
      throw Error(ErrorCode::io, "results CSV line " + std::to_string(line_no) + " has the wrong field count");
    auto get = [&](const char* name) -> const std::string& { return f[col[name]]; };
    ResultRow r;
    try {
      r.run_id = std::stoll(get("run_id"));
      r.model = get("model");
      r.n = static_cast<Index>(std::stoll(get("n")));
      r.m = std::stoi(get("m"));
      r.d = std::stoi(get("d"));
      r.h = std::strtod(get("h").c_str(), nullptr);
      r.epsilon = std::strtod(get("epsilon").c_str(), nullptr);
      r.dt = std::strtod(get("dt").c_str(), nullptr);
      r.T = std::strtod(get("T").c_str(), nullptr);
      r.seed = std::stoull(get("seed"));
      r.metric_name = get("metric_name");
      r.metric_value = std::strtod(get("metric_value").c_str(), nullptr);
      r.status = get("status");
      r.config_digest = get("config_digest");
      r.content_hash = get("content_hash");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::io, "results CSV line " + std::to_string(line_no) + " is malformed");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SweepCell> expand(const ExperimentPlan& plan, bool auto_schedule) {
  auto or_base = [](const auto& axis, auto base) {
    using T = decltype(base);
    return axis.empty() ? std::vector<T>{base} : std::vector<T>(axis.begin(), axis.end());
  };
  const auto ns = or_base(plan.n_values, plan.base.n);
  const auto hs = or_base(plan.h_values, plan.base.h);
  const auto es = or_base(plan.epsilon_values, plan.base.epsilon);
  const auto dts = or_base(plan.dt_values, plan.base.dt);
  const auto seeds = or_base(plan.seed_values, plan.base.seed);
  const int d = preset(plan.base.model, plan.base.model_options).d;

  std::vector<SweepCell> cells;
  std::int64_t id = 0;
  for (Index n : ns)
    for (double h : hs)
      for (double eps : es)
        for (double dt : dts)
          for (std::uint64_t seed : seeds) {
            SweepCell cell{id++, {plan.base, plan.schedule}};
            SimConfig& c = cell.config.sim;
            c.n = n;
            c.h = h;
            c.epsilon = eps;
            c.dt = dt;
            c.seed = seed;
            const bool fill_h = auto_schedule || plan.auto_h;
            const bool fill_e = auto_schedule || plan.auto_epsilon;
            if (fill_h || fill_e) {
              const auto p = schedule(static_cast<double>(std::max<Index>(n, 2)), d, plan.schedule.r, plan.schedule.C);
              if (fill_h) c.h = p.h;
              if (fill_e) c.epsilon = p.epsilon;
            }
            c.validate();
            cells.push_back(std::move(cell));
          }
  return cells;
}

namespace {

struct CellOutcome {
  std::vector<ResultRow> rows;
  std::optional<Vector> histogram;  // terminal marginal bin probabilities
};

ResultRow row_for(const SweepCell& cell, const ModelSpec& model, const std::string& digest) {
  const SimConfig& c = cell.config.sim;
  ResultRow r;
  r.run_id = cell.id;
  r.model = c.model;
  r.n = c.n;
  r.m = model.m;
  r.d = model.d;
  r.h = c.h;
  r.epsilon = c.epsilon;
  r.dt = c.dt;
  r.T = c.T;
  r.seed = c.seed;
  r.config_digest = digest;
  r.status = "ok";
  return r;
}

/// Bin probabilities of one coordinate; nullopt when a sample falls outside.
std::optional<Vector> marginal_histogram(const ParticleEnsemble& e, const HistogramSpec& spec) {
  Histogram hist({{spec.lo, spec.hi, spec.bins}});
  const auto col = e.coordinate(spec.block, spec.component);
  for (Index k = 0; k < e.size(); ++k) {
    const double x = col[k];
    if (!hist.add(&x)) return std::nullopt;
  }
  return hist.probabilities();
}

const ParticleEnsemble& terminal(const Trajectory& traj) {
  const auto it = std::max_element(traj.record_times.begin(), traj.record_times.end());
  return traj.snapshots[static_cast<std::size_t>(it - traj.record_times.begin())];
}

}  // namespace

std::vector<ResultRow> sweep(const ExperimentPlan& plan, const SweepOptions& options) {
  ExperimentPlan effective = plan;
  if (options.strategy) effective.base.strategy = *options.strategy;
  const auto cells = expand(effective, options.auto_schedule);
  const ModelSpec model = preset(effective.base.model, effective.base.model_options);
  const bool want_oracle = std::count(plan.comparisons.begin(), plan.comparisons.end(), Comparison::particle_vs_oracle);
  const bool want_n_vs_n = std::count(plan.comparisons.begin(), plan.comparisons.end(), Comparison::n_vs_n);
  auto log = [&](const std::string& s) {
    if (options.log) options.log(s);
  };
  const int workers = std::max(1, options.workers);

  // One oracle reference per distinct dt; it does not depend on n, h or epsilon.
  std::map<double, Vector> oracle_hist;
  if (want_oracle) {
    if (!model.oracle)
      throw Error(ErrorCode::no_oracle_available, "model '" + model.name + "' has no oracle for particle-vs-oracle");
    for (const auto& cell : cells) {
      const double dt = cell.config.sim.dt;
      if (oracle_hist.count(dt)) continue;
      SimConfig oc = effective.base;
      oc.dt = dt;
      oc.seed = plan.oracle_seed;
      oc.n = plan.oracle_copies;
      log("oracle reference: " + std::to_string(plan.oracle_copies) + " copies, dt " + std::to_string(dt));
      const auto traj = run_oracle(model, plan.oracle_copies, oc, {workers, false});
      auto hist = marginal_histogram(terminal(traj), plan.histogram);
      if (!hist) throw Error(ErrorCode::invalid_parameter, "oracle samples fall outside the histogram range");
      oracle_hist.emplace(dt, std::move(*hist));
    }
  }

  std::vector<CellOutcome> outcomes(cells.size());
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), cells.size()));
  const int inner = std::max(1, workers / std::max(1, threads));
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;

  auto run_cell = [&](std::size_t index) {
    const SweepCell& cell = cells[index];
    const std::string digest = hex64(config_digest(cell.config));
    CellOutcome& out = outcomes[index];
    try {
      const auto traj = run(cell.config.sim, model, {inner, true});
      const ParticleEnsemble& e = terminal(traj);
      const std::string bytes = snapshot_bytes(e, cell.config.sim.seed, config_digest(cell.config));
      const std::string hash = git_blob_sha1(bytes);
      if (plan.write_snapshots && !options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir / "cells");
        char name[64];
        std::snprintf(name, sizeof name, "cell_%06lld.bin", static_cast<long long>(cell.id));
        std::ofstream os(options.out_dir / "cells" / name, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      }
      auto add = [&](std::string name, double value, std::string status = "ok") {
        ResultRow r = row_for(cell, model, digest);
        r.metric_name = std::move(name);
        r.metric_value = value;
        r.status = std::move(status);
        r.content_hash = hash;
        out.rows.push_back(std::move(r));
      };
      for (int j = 0; j < model.m; ++j) {
        double rate = 0.0;
        for (const auto& s : traj.diagnostics) rate += s.floor_hit_rate.size() ? s.floor_hit_rate[j] : 0.0;
        add("floor_hit_rate_b" + std::to_string(j), traj.diagnostics.empty() ? 0.0 : rate / traj.diagnostics.size());
      }
      double drift_max = 0.0;
      for (const auto& s : traj.diagnostics) drift_max = std::max(drift_max, s.drift_max);
      add("drift_max", drift_max);
      const Vector mean = e.positions().colwise().mean().transpose();
      const Vector var = (e.positions().rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
                         static_cast<double>(std::max<Index>(e.size() - 1, 1));
      for (int j = 0; j < model.m; ++j)
        for (int c = 0; c < model.d; ++c) {
          const std::string tag = "b" + std::to_string(j) + "c" + std::to_string(c);
          add("terminal_mean_" + tag, mean[j * model.d + c]);
          add("terminal_var_" + tag, var[j * model.d + c]);
        }
      out.histogram = marginal_histogram(e, plan.histogram);
      if (want_oracle) {
        if (out.histogram)
          add("histogram_tv_oracle", tv(*out.histogram, oracle_hist.at(cell.config.sim.dt)));
        else
          add("histogram_tv_oracle", std::nan(""), "histogram_out_of_range");
      }
    } catch (const DivergedError& err) {
      ResultRow r = row_for(cell, model, digest);
      r.metric_name = "diverged_step";
      r.metric_value = static_cast<double>(err.step());
      r.status = "diverged";
      out.rows.push_back(std::move(r));
      std::lock_guard lock(log_mutex);
      log("cell " + std::to_string(cell.id) + " diverged at step " + std::to_string(err.step()));
      return;
    }
    std::lock_guard lock(log_mutex);
    log("cell " + std::to_string(cell.id) + " done (n " + std::to_string(cell.config.sim.n) + ", seed " +
        std::to_string(cell.config.sim.seed) + ")");
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        run_cell(i);
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (want_n_vs_n) {
    // Reference: same h, epsilon, dt and seed axes at the largest n.
    const std::size_t per_n = cells.size() / std::max<std::size_t>(plan.n_values.size(), 1);
    std::size_t largest = 0;
    for (std::size_t i = 0; i < plan.n_values.size(); ++i)
      if (plan.n_values[i] > plan.n_values[largest]) largest = i;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (outcomes[i].rows.empty() || outcomes[i].rows.front().status == "diverged") continue;
      const std::size_t ref = largest * per_n + i % per_n;
      ResultRow r = outcomes[i].rows.front();
      r.metric_name = "histogram_tv_largest_n";
      if (outcomes[i].histogram && outcomes[ref].histogram) {
        r.metric_value = tv(*outcomes[i].histogram, *outcomes[ref].histogram);
        r.status = "ok";
      } else {
        r.metric_value = std::nan("");
        r.status = outcomes[ref].rows.front().status == "diverged" ? "reference_diverged" : "histogram_out_of_range";
      }
      outcomes[i].rows.push_back(std::move(r));
    }
  }

  std::vector<ResultRow> rows;
  for (auto& o : outcomes)
    for (auto& r : o.rows) rows.push_back(std::move(r));
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.run_id, a.metric_name) < std::tie(b.run_id, b.metric_name);
  });
  return rows;
}

ConvergenceSummary report_convergence(const std::vector<ResultRow>& rows, const ConvergenceOptions& options) {
  std::map<Index, std::vector<double>> by_n;
  for (const auto& r : rows)
    if (r.metric_name == options.metric && r.status == "ok" && std::isfinite(r.metric_value))
      by_n[r.n].push_back(r.metric_value);
  if (by_n.size() < 2)
    throw Error(ErrorCode::insufficient_data,
                "need at least 2 values of n with metric " + options.metric + ", found " + std::to_string(by_n.size()));
  for (const auto& [n, v] : by_n)
    if (static_cast<std::int64_t>(v.size()) < options.min_seeds)
      throw Error(ErrorCode::insufficient_data, "n = " + std::to_string(n) + " has " + std::to_string(v.size()) +
                                                    " seeds; at least " + std::to_string(options.min_seeds) +
                                                    " are required");

  ConvergenceSummary s;
  s.metric = options.metric;
  const double exponent = -options.r / (options.d * options.r + 4.0);
  for (const auto& [n, v] : by_n) {
    ConvergenceRow row;
    row.n = n;
    row.count = static_cast<std::int64_t>(v.size());
    const Eigen::Map<const Vector> x(v.data(), static_cast<Index>(v.size()));
    row.mean = x.mean();
    const double var = (x.array() - row.mean).square().sum() / static_cast<double>(v.size() - 1);
    row.std_error = std::sqrt(var / static_cast<double>(v.size()));
    row.rate_reference = n > 1 ? std::pow(std::log(static_cast<double>(n)), exponent) : 1.0;
    s.rows.push_back(row);
  }

  // Least squares mean ~ a + b * rate_reference over the per-n means.
  const Index k = static_cast<Index>(s.rows.size());
  Matrix A(k, 2);
  Vector y(k);
  for (Index i = 0; i < k; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = s.rows[i].rate_reference;
    y[i] = s.rows[i].mean;
  }
  const Vector coef = A.colPivHouseholderQr().solve(y);
  s.fit_intercept = coef[0];
  s.fit_slope = coef[1];

  s.nonincreasing = true;
  for (std::size_t i = 0; i + 1 < s.rows.size(); ++i) {
    const auto &a = s.rows[i], &b = s.rows[i + 1];
    if (b.mean - a.mean > std::hypot(a.std_error, b.std_error)) s.nonincreasing = false;
  }
  const auto &first = s.rows.front(), &last = s.rows.back();
  s.decreasing = s.nonincreasing && first.mean - last.mean > std::hypot(first.std_error, last.std_error);
  s.verdict = s.decreasing ? "monotone decreasing" : (s.nonincreasing ? "nonincreasing, not resolved" : "not decreasing");
  if (!s.nonincreasing) s.verdict = "not decreasing";
  return s;
}

void write_summary_csv(const std::filesystem::path& path, const ConvergenceSummary& summary) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "metric,n,count,mean,std_error,rate_reference,fit_intercept,fit_slope,verdict\n");
  for (const auto& r : summary.rows)
    std::fprintf(f, "%s,%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", summary.metric.c_str(),
                 static_cast<long long>(r.n), static_cast<long long>(r.count), r.mean, r.std_error, r.rate_reference,
                 summary.fit_intercept, summary.fit_slope, summary.verdict.c_str());
  std::fclose(f);
}

void guard_outputs(const std::filesystem::path& dir, const std::vector<std::string>& names, bool force) {
  if (force) return;
  for (const auto& name : names)
    if (std::filesystem::exists(dir / name))
      throw Error(ErrorCode::output_exists, (dir / name).string() + " exists; pass --force to overwrite");
}

}  // namespace condmv
