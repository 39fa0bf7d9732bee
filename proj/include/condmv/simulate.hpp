#pragma once

#include "condmv/core.hpp"
#include "condmv/ensemble.hpp"
#include "condmv/models.hpp"
#include "condmv/nwdrift.hpp"
#include "condmv/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace condmv {

/// Fully resolved description of one particle run.
struct SimConfig {
  std::string model = "decoupled-oracle";
  PresetOptions model_options;
  Index n = 1000;
  double h = 0.1;
  double epsilon = 1e-3;
  double dt = 0.01;
  double T = 1.0;
  std::uint64_t seed = 1;
  std::string kernel = "gaussian";
  Strategy strategy = Strategy::naive;
  std::vector<double> record_times;  // empty means {T}

  void validate() const;
  std::int64_t steps() const;
  /// Step indices at which snapshots are taken, in record_times order.
  std::vector<std::int64_t> record_steps() const;
  DriftParams drift_params(int block_dim) const;
};

/// n independent draws from mu0; particle k's draw depends only on (seed, k).
ParticleEnsemble init_ensemble(const ModelSpec& model, Index n, std::uint64_t seed);

/// One Euler-Maruyama step X + drift dt + sqrt(2 dt) sigma xi. The Gaussian
/// increment for (particle, block, component) is addressed by step_index.
/// denominators, when non-null, receives the n x m raw kernel averages.
ParticleEnsemble step(const ParticleEnsemble& ensemble, const ModelSpec& model, const DriftParams& p, double dt,
                      const CounterRng& rng, std::uint32_t step_index, const DriftOptions& options = {},
                      Matrix* denominators = nullptr);

struct StepDiagnostics {
  std::int64_t step = 0;
  double t = 0.0;
  Vector floor_hit_rate;  // per block; empty for oracle runs
  double drift_max = 0.0;
  Vector mean;            // per coordinate, state at t
  Vector variance;
};

struct Trajectory {
  std::vector<ParticleEnsemble> snapshots;  // one per record time
  std::vector<double> record_times;
  std::vector<StepDiagnostics> diagnostics;
};

struct RunOptions {
  int workers = 1;
  bool diagnostics = true;
};

/// Integrates the particle system from 0 to T with fixed dt.
Trajectory run(const SimConfig& config, const RunOptions& options = {});
Trajectory run(const SimConfig& config, const ModelSpec& model, const RunOptions& options = {});

/// n_copies independent Euler-Maruyama paths of the limit SDE driven by the
/// oracle drift. Noise addresses match run(), so shared seeds give shared noise.
Trajectory run_oracle(const ModelSpec& model, Index n_copies, const SimConfig& config,
                      const RunOptions& options = {});

// Snapshot files -------------------------------------------------------------

struct SnapshotHeader {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t d = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
};

/// Binary layout, all little-endian:
///   8 bytes magic "CONDMVS1"
///   u64 n, u64 m, u64 d, f64 t, u64 seed, u64 config_digest
///   n*m*d f64 positions, particle-major then block then component.
void write_snapshot(std::ostream& os, const ParticleEnsemble& e, std::uint64_t seed, std::uint64_t config_digest);
void write_snapshot(const std::filesystem::path& path, const ParticleEnsemble& e, std::uint64_t seed,
                    std::uint64_t config_digest);
/// The exact bytes write_snapshot would produce.
std::string snapshot_bytes(const ParticleEnsemble& e, std::uint64_t seed, std::uint64_t config_digest);
ParticleEnsemble read_snapshot(const std::filesystem::path& path, SnapshotHeader* header = nullptr);

/// CSV with header particle,block,component,value.
void write_snapshot_csv(const std::filesystem::path& path, const ParticleEnsemble& e);

}  // namespace condmv
