#pragma once

#include "condmv/divergences.hpp"
#include "condmv/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace condmv {

/// Parameters of the default (h, epsilon) schedule.
struct ScheduleSpec {
  double r = 0.5;
  double C = 1.0;
  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

/// A single run as read from a config file. h and epsilon are always resolved;
/// the schedule that would fill them is kept for provenance.
struct RunConfig {
  SimConfig sim;
  ScheduleSpec schedule;
};

enum class Comparison { particle_vs_oracle, n_vs_n };

std::string to_string(Comparison c);

struct HistogramSpec {
  int block = 0;
  int component = 0;
  int bins = 50;
  double lo = -15.0;
  double hi = 15.0;
};

/// Cartesian sweep over a base config. Each axis may be empty (not swept).
struct ExperimentPlan {
  SimConfig base;
  ScheduleSpec schedule;
  bool auto_h = false;        // fill h per cell from the schedule
  bool auto_epsilon = false;  // fill epsilon per cell from the schedule
  std::vector<Index> n_values;
  std::vector<double> h_values;
  std::vector<double> epsilon_values;
  std::vector<double> dt_values;
  std::vector<std::uint64_t> seed_values;
  std::vector<Comparison> comparisons;
  Index oracle_copies = 100000;
  std::uint64_t oracle_seed = 1000003;
  HistogramSpec histogram;
  std::int64_t max_runs = 10000;
  bool write_snapshots = false;

  std::int64_t cell_count() const;
};

bool operator==(const SimConfig& a, const SimConfig& b);
bool operator==(const RunConfig& a, const RunConfig& b);
bool operator==(const ExperimentPlan& a, const ExperimentPlan& b);

using LoadedConfig = std::variant<RunConfig, ExperimentPlan>;

/// Parses JSON with // and /* */ comments. An object with a "base" key is an
/// experiment plan, anything else a single run.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);
ExperimentPlan parse_plan(const std::string& text);

/// Canonical JSON; parse(emit(x)) == x.
std::string emit(const RunConfig& config);
std::string emit(const ExperimentPlan& plan);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(const std::string& bytes);
/// FNV-1a of the canonical emitted config.
std::uint64_t config_digest(const RunConfig& config);
std::string hex64(std::uint64_t v);

/// git blob hash: SHA-1 of "blob <size>\0" followed by the bytes.
std::string git_blob_sha1(const std::string& bytes);

}  // namespace condmv
