// condmv command-line driver.

#include "condmv/config.hpp"
#include "condmv/divergences.hpp"
#include "condmv/harness.hpp"
#include "condmv/kernels.hpp"
#include "condmv/models.hpp"
#include "condmv/parallel.hpp"
#include "condmv/plot.hpp"
#include "condmv/schedule.hpp"
#include "condmv/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace condmv;
using json = nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  os << text;
}


void note(const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); }

void plot_or_warn(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  if (!write_svg_plot(path, spec, series)) note("warning: could not write plot " + path.string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_diagnostics_csv(const std::filesystem::path& path, const Trajectory& traj, int m, int d) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "step,t,drift_max");
  for (int j = 0; j < m; ++j) std::fprintf(f, ",floor_hit_rate_b%d", j);
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < d; ++c) std::fprintf(f, ",mean_b%dc%d,var_b%dc%d", j, c, j, c);
  std::fprintf(f, "\n");
  for (const auto& s : traj.diagnostics) {
    std::fprintf(f, "%lld,%.17g,%.17g", static_cast<long long>(s.step), s.t, s.drift_max);
    for (int j = 0; j < m; ++j) std::fprintf(f, ",%.17g", j < s.floor_hit_rate.size() ? s.floor_hit_rate[j] : 0.0);
    for (Index q = 0; q < s.mean.size(); ++q) std::fprintf(f, ",%.17g,%.17g", s.mean[q], s.variance[q]);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

struct Common {
  std::string config;
  std::string out = "out";
  int workers = 0;
  bool force = false;
  std::string strategy;
};

int workers_or_default(int w) { return w > 0 ? w : default_workers(); }

int cmd_simulate(const Common& o, std::optional<std::uint64_t> seed) {
  const auto loaded = load_config(o.config);
  if (!std::holds_alternative<RunConfig>(loaded))
    throw ConfigError("base", "simulate expects a single-run config, not an experiment plan");
  RunConfig rc = std::get<RunConfig>(loaded);
  if (seed) rc.sim.seed = *seed;
  if (!o.strategy.empty()) rc.sim.strategy = parse_strategy(o.strategy);
  rc.sim.validate();
  const ModelSpec model = preset(rc.sim.model, rc.sim.model_options);

  const std::filesystem::path out(o.out);
  std::vector<std::string> names = {"config.resolved.json", "diagnostics.csv"};
  const auto steps = rc.sim.record_steps();
  for (std::size_t r = 0; r < steps.size(); ++r) {
    names.push_back("snapshot_" + std::to_string(r) + ".bin");
    names.push_back("snapshot_" + std::to_string(r) + ".csv");
  }
  guard_outputs(out, names, o.force);
  std::filesystem::create_directories(out);
  write_text(out / "config.resolved.json", emit(rc));

  const auto traj = run(rc.sim, model, {workers_or_default(o.workers), true});
  const auto digest = config_digest(rc);
  for (std::size_t r = 0; r < traj.snapshots.size(); ++r) {
    write_snapshot(out / ("snapshot_" + std::to_string(r) + ".bin"), traj.snapshots[r], rc.sim.seed, digest);
    write_snapshot_csv(out / ("snapshot_" + std::to_string(r) + ".csv"), traj.snapshots[r]);
  }
  write_diagnostics_csv(out / "diagnostics.csv", traj, model.m, model.d);
  json summary = {{"status", "ok"},         {"out", out.string()},           {"steps", rc.sim.steps()},
                  {"snapshots", traj.snapshots.size()}, {"config_digest", hex64(digest)}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_sweep(const Common& o, bool auto_schedule, std::optional<double> r, std::optional<double> C) {
  const auto loaded = load_config(o.config);
  if (!std::holds_alternative<ExperimentPlan>(loaded))
    throw ConfigError("base", "sweep expects an experiment plan with a 'base' object");
  ExperimentPlan plan = std::get<ExperimentPlan>(loaded);
  if (r) {
    if (!(*r > 0.0 && *r < 1.0)) throw ConfigError("--r", "must lie in (0, 1)");
    plan.schedule.r = *r;
  }
  if (C) {
    if (!(*C > 0.0)) throw ConfigError("--C", "must be positive");
    plan.schedule.C = *C;
  }
  if (!o.strategy.empty()) plan.base.strategy = parse_strategy(o.strategy);
  if (auto_schedule) plan.auto_h = plan.auto_epsilon = true;

  const std::filesystem::path out(o.out);
  guard_outputs(out, {"plan.resolved.json", "results.csv", "summary.csv", "tv_vs_n.svg", "floor_hit_vs_epsilon.svg"},
                o.force);
  std::filesystem::create_directories(out);
  write_text(out / "plan.resolved.json", emit(plan));

  SweepOptions so;
  so.workers = workers_or_default(o.workers);
  so.auto_schedule = auto_schedule;
  so.out_dir = out;
  so.log = note;
  const auto rows = sweep(plan, so);
  write_results_csv(out / "results.csv", rows);

  json summary = {{"status", "ok"}, {"cells", plan.cell_count()}, {"rows", rows.size()}};
  std::int64_t diverged = 0;
  for (const auto& row : rows) diverged += row.status == "diverged";
  summary["diverged"] = diverged;
  try {
    ConvergenceOptions co;
    co.r = plan.schedule.r;
    co.d = preset(plan.base.model, plan.base.model_options).d;
    const auto conv = report_convergence(rows, co);
    write_summary_csv(out / "summary.csv", conv);
    summary["verdict"] = conv.verdict;
    PlotSeries s{"mean TV to oracle", {}, {}, {}};
    for (const auto& c : conv.rows) {
      s.x.push_back(static_cast<double>(c.n));
      s.y.push_back(c.mean);
      s.error.push_back(c.std_error);
    }
    plot_or_warn(out / "tv_vs_n.svg", {"Histogram TV to oracle", "n", "TV", true, false}, {s});
  } catch (const Error& e) {
    summary["convergence"] = e.what();
  }
  if (plan.epsilon_values.size() > 1) {
    std::map<double, std::pair<double, int>> acc;
    for (const auto& row : rows)
      if (row.metric_name == "floor_hit_rate_b0" && row.status == "ok") {
        acc[row.epsilon].first += row.metric_value;
        acc[row.epsilon].second += 1;
      }
    PlotSeries s{"block 0", {}, {}, {}};
    for (const auto& [eps, v] : acc) {
      s.x.push_back(eps);
      s.y.push_back(v.first / v.second);
    }
    plot_or_warn(out / "floor_hit_vs_epsilon.svg", {"Floor hit rate", "epsilon", "rate", true, false}, {s});
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_report(const std::string& results, const std::string& metric, double r, int d, const std::string& out,
               bool force) {
  const auto rows = read_results_csv(results);
  ConvergenceOptions co;
  co.metric = metric;
  co.r = r;
  co.d = d;
  const auto conv = report_convergence(rows, co);
  if (!out.empty()) {
    guard_outputs(out, {"summary.csv"}, force);
    std::filesystem::create_directories(out);
    write_summary_csv(std::filesystem::path(out) / "summary.csv", conv);
  }
  json j = {{"metric", conv.metric},
            {"verdict", conv.verdict},
            {"fit_intercept", conv.fit_intercept},
            {"fit_slope", conv.fit_slope}};
  for (const auto& row : conv.rows)
    j["rows"].push_back({{"n", row.n}, {"count", row.count}, {"mean", row.mean}, {"std_error", row.std_error}});
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_check(const std::string& kernel_id, int dim, double h, const std::string& model_name, const std::string& out,
              bool force) {
  const KernelSpec k = make_kernel(kernel_id, dim);
  const auto rk = check_assumption_K(k);
  auto q = [](const QuadratureCheck& c) { return json{{"value", c.value}, {"pass", c.pass}}; };
  json j;
  j["kernel"] = {{"id", kernel_id},
                 {"dim", dim},
                 {"mass", q(rk.mass)},
                 {"mean", q(rk.mean)},
                 {"exp_moment", q(rk.exp_moment)},
                 {"symmetric", q(rk.symmetric)},
                 {"sup", q(rk.sup)},
                 {"all_pass", rk.all_pass()}};
  const ModelSpec model = preset(model_name);
  AssumptionROptions ro;
  ro.block_dim = model.d;
  const auto rr = check_assumption_R(model.mu0, h, make_kernel(kernel_id, model.d), ro);
  json r1 = json::array();
  for (const auto& e : rr.r1)
    r1.push_back({{"block", e.block}, {"value", e.finite ? json(e.value) : json("inf")}, {"std_error", e.std_error},
                  {"finite", e.finite}, {"method", e.method}});
  j["initial_law"] = {{"model", model_name}, {"h", h}, {"r1", r1}, {"moments_finite", rr.moments_finite},
                      {"sup_density", rr.sup_density}, {"bounded", rr.bounded}, {"positive", rr.positive},
                      {"all_finite", rr.all_finite()}};
  if (rr.r3)
    j["initial_law"]["r3"] = {{"abs_log_density", rr.r3->abs_log_density},
                              {"score_fourth", rr.r3->score_fourth},
                              {"laplacian_ratio_sq", rr.r3->laplacian_ratio_sq}};
  if (!out.empty()) {
    guard_outputs(out, {"assumptions.json"}, force);
    std::filesystem::create_directories(out);
    write_text(std::filesystem::path(out) / "assumptions.json", j.dump(2) + "\n");
  }
  std::cout << j.dump() << "\n";
  return rk.all_pass() && rr.all_finite() ? 0 : 1;
}

int cmd_divergence(const std::string& suite, std::int64_t trials, std::uint64_t seed, int workers,
                   const std::string& out, bool force) {
  if (suite == "inequalities") {
    InequalityOptions io;
    io.seed = seed;
    io.workers = workers_or_default(workers);
    const auto report = inequality_suite(trials, io);
    if (!out.empty()) {
      guard_outputs(out, {"inequalities.csv"}, force);
      std::filesystem::create_directories(out);
      report.write_csv(std::filesystem::path(out) / "inequalities.csv");
    }
    const auto v = report.violations();
    std::cout << json{{"suite", suite}, {"trials", trials}, {"checks", report.records.size()}, {"violations", v}}.dump()
              << "\n";
    return v == 0 ? 0 : 1;
  }
  if (suite == "mollification") {
    const std::vector<double> hs = {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
    const std::vector<std::string> kernels = {"gaussian", "epanechnikov", "uniform-ball"};
    const auto p = Density1D::normal(0.0, 1.0);
    std::ostringstream csv;
    csv << "kernel,h,entropy,gaussian_closed_form,ratio_to_h2_over_4\n";
    std::vector<PlotSeries> series;
    for (const auto& id : kernels) {
      PlotSeries s{id, {}, {}, {}};
      for (double h : hs) {
        const double H = mollification_entropy(p, make_kernel(id, 1), h);
        const double closed = id == "gaussian" ? 0.5 * (std::log1p(h) + 1.0 / (1.0 + h) - 1.0) : std::nan("");
        csv << id << "," << fmt(h) << "," << fmt(H) << "," << fmt(closed) << "," << fmt(H / (h * h / 4.0)) << "\n";
        s.x.push_back(h);
        s.y.push_back(H);
      }
      series.push_back(std::move(s));
    }
    if (!out.empty()) {
      guard_outputs(out, {"mollification.csv", "mollification_vs_h.svg"}, force);
      std::filesystem::create_directories(out);
      write_text(std::filesystem::path(out) / "mollification.csv", csv.str());
      plot_or_warn(std::filesystem::path(out) / "mollification_vs_h.svg",
                   {"Mollification entropy, N(0,1)", "h", "H(p | p*K_h)", true, true}, series);
    }
    std::cout << csv.str();
    return 0;
  }
  throw ConfigError("--suite", "unknown suite '" + suite + "' (inequalities, mollification)");
}

int cmd_rate(const std::vector<double>& ns, int d, double k, double r, double C, bool optimize) {
  std::printf("n,h,epsilon,rate_bound%s\n", optimize ? ",opt_h,opt_epsilon,opt_rate_bound,opt_interior" : "");
  for (double n : ns) {
    const auto p = schedule(n, d, r, C);
    const double b = rate_bound(p.h, p.epsilon, n, d, k, r, C);
    std::printf("%.17g,%.17g,%.17g,%.17g", n, p.h, p.epsilon, b);
    if (optimize) {
      const auto best = optimize_rate(n, d, k, r, C);
      std::printf(",%.17g,%.17g,%.17g,%s", best.h, best.epsilon, best.value, best.interior ? "true" : "false");
    }
    std::printf("\n");
  }
  return 0;
}

void print_error(const std::string& code, const std::string& message, const std::string& key = "") {
  json j = {{"error", code}, {"message", message}};
  if (!key.empty()) j["key"] = key;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional McKean-Vlasov particle simulations and diagnostics"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::uint64_t> seed;
  bool auto_schedule = false;
  std::optional<double> r_opt, C_opt;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", common.config, "Config file (JSON with comments)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--workers", common.workers, "Worker threads (default: CONDMV_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--force", common.force, "Overwrite existing outputs");
  };

  auto* sim = app.add_subcommand("simulate", "Run one particle simulation");
  add_common(sim, true);
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("--strategy", common.strategy, "Drift strategy")->check(CLI::IsMember({"naive", "celllist"}));

  auto* sw = app.add_subcommand("sweep", "Run an experiment plan");
  add_common(sw, true);
  sw->add_flag("--auto-schedule", auto_schedule, "Fill h and epsilon from the schedule at each n");
  sw->add_option("--strategy", common.strategy, "Drift strategy")->check(CLI::IsMember({"naive", "celllist"}));
  sw->add_option("--r", r_opt, "Schedule exponent r");
  sw->add_option("--C", C_opt, "Schedule constant C");

  std::string results, metric = "histogram_tv_oracle";
  double report_r = 0.5;
  int report_d = 1;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "Summarize a sweep results CSV");
  rep->add_option("--results", results, "results.csv from a sweep")->required()->check(CLI::ExistingFile);
  rep->add_option("--metric", metric, "Metric to summarize");
  rep->add_option("--r", report_r, "Schedule exponent r for the rate reference");
  rep->add_option("--d", report_d, "Block dimension for the rate reference");
  rep->add_option("--out", report_out, "Directory for summary.csv");
  rep->add_flag("--force", common.force, "Overwrite existing outputs");

  std::string kernel = "gaussian", model = "decoupled-oracle", check_out;
  int dim = 1;
  double h = 0.01;
  auto* chk = app.add_subcommand("check-assumptions", "Kernel and initial-law reports");
  chk->set_help_flag("--help", "Print this help message and exit");
  chk->add_option("--kernel", kernel, "Kernel id")->check(CLI::IsMember({"gaussian", "epanechnikov", "uniform-ball"}));
  chk->add_option("--dim", dim, "Kernel dimension for the kernel report")->check(CLI::Range(1, 2));
  chk->add_option("--h", h, "Bandwidth for the initial-law report")->check(CLI::PositiveNumber);
  chk->add_option("--model", model, "Preset whose initial law is checked");
  chk->add_option("--out", check_out, "Directory for assumptions.json");
  chk->add_flag("--force", common.force, "Overwrite existing outputs");

  std::string suite = "inequalities", div_out;
  std::int64_t trials = 10000;
  std::uint64_t div_seed = 1;
  int div_workers = 0;
  auto* div = app.add_subcommand("divergence", "Inequality suite and mollification tables");
  div->add_option("--suite", suite, "inequalities or mollification");
  div->add_option("--trials", trials, "Random trials for the inequality suite")->check(CLI::PositiveNumber);
  div->add_option("--seed", div_seed, "Seed");
  div->add_option("--workers", div_workers, "Worker threads")->check(CLI::PositiveNumber);
  div->add_option("--out", div_out, "Output directory");
  div->add_flag("--force", common.force, "Overwrite existing outputs");

  std::vector<double> ns = {1e2, 1e3, 1e4, 1e5, 1e6};
  int rate_d = 1;
  double rate_k = 1, rate_r = 0.5, rate_C = 1;
  bool optimize = false;
  auto* rate = app.add_subcommand("rate", "Tabulate the schedule and its error bound");
  rate->add_option("--n", ns, "Particle counts");
  rate->add_option("--d", rate_d, "Block dimension");
  rate->add_option("--k", rate_k, "Number of tracked particles");
  rate->add_option("--r", rate_r, "Schedule exponent r");
  rate->add_option("--C", rate_C, "Schedule constant C");
  rate->add_flag("--optimize", optimize, "Also minimize the bound over a log grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(common, seed);
    if (*sw) return cmd_sweep(common, auto_schedule, r_opt, C_opt);
    if (*rep) return cmd_report(results, metric, report_r, report_d, report_out, common.force);
    if (*chk) return cmd_check(kernel, dim, h, model, check_out, common.force);
    if (*div) return cmd_divergence(suite, trials, div_seed, div_workers, div_out, common.force);
    if (*rate) return cmd_rate(ns, rate_d, rate_k, rate_r, rate_C, optimize);
  } catch (const ConfigError& e) {
    print_error(to_string(e.code()), e.what(), e.key());
    return 1;
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 1;
}
