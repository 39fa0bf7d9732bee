#pragma once

#include "condmv/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace condmv {

/// One tidy results row.
struct ResultRow {
  std::int64_t run_id = 0;
  std::string model;
  Index n = 0;
  int m = 0;
  int d = 0;
  double h = 0.0;
  double epsilon = 0.0;
  double dt = 0.0;
  double T = 0.0;
  std::uint64_t seed = 0;
  std::string metric_name;
  double metric_value = 0.0;
  std::string status;
  std::string config_digest;
  std::string content_hash;
};

/// Column order of the results CSV.
const std::vector<std::string>& result_columns();
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

struct SweepCell {
  std::int64_t id = 0;
  RunConfig config;
};

/// Cartesian expansion in fixed order: n, h, epsilon, dt, seed (seed fastest).
/// With auto_schedule, h and epsilon come from the schedule at each cell's n.
std::vector<SweepCell> expand(const ExperimentPlan& plan, bool auto_schedule = false);

struct SweepOptions {
  int workers = 1;
  bool auto_schedule = false;
  std::optional<Strategy> strategy;
  std::filesystem::path out_dir;  // cell snapshots go here when the plan asks for them
  std::function<void(const std::string&)> log;
};

/// Runs every cell. Diverged cells are recorded with status "diverged" and the
/// sweep continues. Rows come back sorted by run_id, then metric_name.
std::vector<ResultRow> sweep(const ExperimentPlan& plan, const SweepOptions& options = {});

struct ConvergenceRow {
  Index n = 0;
  std::int64_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double rate_reference = 0.0;  // (log n)^(-r / (d r + 4))
};

struct ConvergenceSummary {
  std::string metric;
  std::vector<ConvergenceRow> rows;
  double fit_intercept = 0.0;
  double fit_slope = 0.0;   // mean ~ intercept + slope * rate_reference
  bool nonincreasing = false;
  bool decreasing = false;  // nonincreasing and first - last beyond one combined standard error
  std::string verdict;
};

struct ConvergenceOptions {
  std::string metric = "histogram_tv_oracle";
  double r = 0.5;
  int d = 1;
  std::int64_t min_seeds = 5;
};

/// Per-n mean and standard error of a metric over seeds, a fit against the
/// logarithmic rate, and a monotonicity verdict within one standard error.
ConvergenceSummary report_convergence(const std::vector<ResultRow>& rows, const ConvergenceOptions& options = {});
void write_summary_csv(const std::filesystem::path& path, const ConvergenceSummary& summary);

/// Throws output_exists unless force is set or none of the names exist in dir.
void guard_outputs(const std::filesystem::path& dir, const std::vector<std::string>& names, bool force);

}  // namespace condmv
