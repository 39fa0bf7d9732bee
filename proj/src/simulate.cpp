#include "condmv/simulate.hpp"
#include "condmv/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace condmv {

void SimConfig::validate() const {
  require(n >= 1, ErrorCode::invalid_parameter, "n must be at least 1");
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_parameter, "dt must be positive");
  require(T >= dt, ErrorCode::invalid_parameter, "T must be at least dt");
  require(h > 0.0 && epsilon > 0.0, ErrorCode::invalid_parameter, "h and epsilon must be positive");
  for (double t : record_times)
    require(t >= 0.0 && t <= T, ErrorCode::invalid_parameter, "record times must lie in [0, T]");
  require(steps() <= 0xFFFFFFFFll, ErrorCode::invalid_parameter, "too many steps for the noise counter");
}

std::int64_t SimConfig::steps() const { return static_cast<std::int64_t>(std::llround(T / dt)); }

std::vector<std::int64_t> SimConfig::record_steps() const {
  std::vector<std::int64_t> out;
  if (record_times.empty()) {
    out.push_back(steps());
    return out;
  }
  for (double t : record_times) out.push_back(std::min(steps(), static_cast<std::int64_t>(std::llround(t / dt))));
  return out;
}

DriftParams SimConfig::drift_params(int block_dim) const { return {h, epsilon, make_kernel(kernel, block_dim)}; }

ParticleEnsemble init_ensemble(const ModelSpec& model, Index n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::invalid_parameter, "n must be at least 1");
  require(static_cast<bool>(model.mu0.sample), ErrorCode::invalid_parameter, "model has no initial sampler");
  const CounterRng rng(seed);
  ParticleEnsemble e(n, model.m, model.d, 0.0);
  for (Index k = 0; k < n; ++k) {
    const Vector x = model.mu0.sample(rng, static_cast<std::uint64_t>(k));
    require(x.size() == model.state_dim(), ErrorCode::invalid_parameter, "sampler returned wrong dimension");
    e.positions().row(k) = x.transpose();
  }
  return e;
}

namespace {

/// X' = X + drift dt + sqrt(2 dt) sigma xi, shared by particle and oracle runs.
ParticleEnsemble advance(const ParticleEnsemble& e, const Matrix& drift, double sigma, double dt,
                         const CounterRng& rng, std::uint32_t step_index, int workers) {
  if (!drift.allFinite()) {
    throw DivergedError(step_index, "non-finite drift at step " + std::to_string(step_index));
  }
  const int m = e.blocks();
  const int d = e.block_dim();
  const double noise_scale = std::sqrt(2.0 * dt) * sigma;
  ParticleEnsemble next(e.size(), m, d, e.time() + dt);
  parallel_for(static_cast<std::size_t>(e.size()), workers, [&](std::size_t first, std::size_t last) {
    for (std::size_t q = first; q < last; ++q) {
      const Index k = static_cast<Index>(q);
      for (int i = 0; i < m; ++i) {
        for (int c = 0; c < d; ++c) {
          const Index col = static_cast<Index>(i) * d + c;
          const double xi = rng.normal({static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i),
                                        static_cast<std::uint32_t>(c), step_index, Stream::increment});
          next.positions()(k, col) = e.positions()(k, col) + drift(k, col) * dt + noise_scale * xi;
        }
      }
    }
  });
  if (!next.all_finite()) {
    throw DivergedError(step_index, "non-finite position after step " + std::to_string(step_index));
  }
  return next;
}

StepDiagnostics diagnose(std::int64_t step_index, const ParticleEnsemble& e, const Matrix& drift,
                         const Matrix* denominators, double epsilon) {
  StepDiagnostics s;
  s.step = step_index;
  s.t = e.time();
  s.drift_max = drift.size() ? drift.cwiseAbs().maxCoeff() : 0.0;
  s.mean = e.positions().colwise().mean().transpose();
  const Matrix centered = e.positions().rowwise() - s.mean.transpose();
  const double denom = e.size() > 1 ? static_cast<double>(e.size() - 1) : 1.0;
  s.variance = centered.colwise().squaredNorm().transpose() / denom;
  if (denominators) {
    s.floor_hit_rate.resize(denominators->cols());
    for (Index j = 0; j < denominators->cols(); ++j)
      s.floor_hit_rate[j] = static_cast<double>((denominators->col(j).array() < epsilon).count()) /
                            static_cast<double>(denominators->rows());
  }
  return s;
}

template <typename DriftFn>
Trajectory integrate(const ModelSpec& model, ParticleEnsemble e, const SimConfig& config,
                     const RunOptions& options, DriftFn&& drift_of) {
  const CounterRng rng(config.seed);
  const auto record = config.record_steps();
  Trajectory traj;
  traj.snapshots.resize(record.size());
  for (auto s : record) traj.record_times.push_back(static_cast<double>(s) * config.dt);
  auto snapshot_if_due = [&](std::int64_t s) {
    for (std::size_t r = 0; r < record.size(); ++r)
      if (record[r] == s) traj.snapshots[r] = e;
  };
  snapshot_if_due(0);
  const std::int64_t steps = config.steps();
  Matrix denominators;
  for (std::int64_t s = 0; s < steps; ++s) {
    // Time is step * dt rather than an accumulated sum.
    e.set_time(static_cast<double>(s) * config.dt);
    Matrix* den = nullptr;
    const Matrix drift = drift_of(e, s, den, denominators);
    if (options.diagnostics) traj.diagnostics.push_back(diagnose(s, e, drift, den, config.epsilon));
    e = advance(e, drift, model.sigma, config.dt, rng, static_cast<std::uint32_t>(s), options.workers);
    e.set_time(static_cast<double>(s + 1) * config.dt);
    snapshot_if_due(s + 1);
  }
  return traj;
}

}  // namespace

ParticleEnsemble step(const ParticleEnsemble& ensemble, const ModelSpec& model, const DriftParams& p, double dt,
                      const CounterRng& rng, std::uint32_t step_index, const DriftOptions& options,
                      Matrix* denominators) {
  require(dt > 0.0, ErrorCode::invalid_parameter, "dt must be positive");
  const Matrix drift = particle_drift(ensemble, model, p, options, denominators);
  return advance(ensemble, drift, model.sigma, dt, rng, step_index, options.workers);
}

Trajectory run(const SimConfig& config, const RunOptions& options) {
  return run(config, preset(config.model, config.model_options), options);
}

Trajectory run(const SimConfig& config, const ModelSpec& model, const RunOptions& options) {
  config.validate();
  const DriftParams p = config.drift_params(model.d);
  const DriftOptions drift_options{config.strategy, options.workers};
  return integrate(model, init_ensemble(model, config.n, config.seed), config, options,
                   [&](const ParticleEnsemble& e, std::int64_t, Matrix*& den, Matrix& storage) {
                     den = options.diagnostics ? &storage : nullptr;
                     return particle_drift(e, model, p, drift_options, den);
                   });
}

Trajectory run_oracle(const ModelSpec& model, Index n_copies, const SimConfig& config, const RunOptions& options) {
  config.validate();
  if (!model.oracle)
    throw Error(ErrorCode::no_oracle_available, "model '" + model.name + "' has no oracle drift");
  return integrate(model, init_ensemble(model, n_copies, config.seed), config, options,
                   [&](const ParticleEnsemble& e, std::int64_t, Matrix*& den, Matrix&) {
                     den = nullptr;
                     Matrix drift(e.size(), e.state_dim());
                     parallel_for(static_cast<std::size_t>(e.size()), options.workers,
                                  [&](std::size_t first, std::size_t last) {
                                    for (std::size_t q = first; q < last; ++q) {
                                      const Index k = static_cast<Index>(q);
                                      drift.row(k) = oracle_drift(model, e.particle(k), e.time()).transpose();
                                    }
                                  });
                     return drift;
                   });
}

// Snapshot files -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'O', 'N', 'D', 'M', 'V', 'S', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw Error(ErrorCode::io, "truncated snapshot file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_snapshot(std::ostream& os, const ParticleEnsemble& e, std::uint64_t seed, std::uint64_t config_digest) {
  os.write(kMagic, 8);
  put_u64(os, static_cast<std::uint64_t>(e.size()));
  put_u64(os, static_cast<std::uint64_t>(e.blocks()));
  put_u64(os, static_cast<std::uint64_t>(e.block_dim()));
  put_f64(os, e.time());
  put_u64(os, seed);
  put_u64(os, config_digest);
  for (Index k = 0; k < e.size(); ++k)
    for (Index c = 0; c < e.state_dim(); ++c) put_f64(os, e.positions()(k, c));
}

void write_snapshot(const std::filesystem::path& path, const ParticleEnsemble& e, std::uint64_t seed,
                    std::uint64_t config_digest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  write_snapshot(os, e, seed, config_digest);
  if (!os) throw Error(ErrorCode::io, "failed writing " + path.string());
}

std::string snapshot_bytes(const ParticleEnsemble& e, std::uint64_t seed, std::uint64_t config_digest) {
  std::ostringstream os(std::ios::binary);
  write_snapshot(os, e, seed, config_digest);
  return os.str();
}

ParticleEnsemble read_snapshot(const std::filesystem::path& path, SnapshotHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, kMagic)) throw Error(ErrorCode::io, "not a snapshot file: " + path.string());
  SnapshotHeader h;
  h.n = get_u64(is);
  h.m = get_u64(is);
  h.d = get_u64(is);
  h.t = get_f64(is);
  h.seed = get_u64(is);
  h.config_digest = get_u64(is);
  ParticleEnsemble e(static_cast<Index>(h.n), static_cast<int>(h.m), static_cast<int>(h.d), h.t);
  for (Index k = 0; k < e.size(); ++k)
    for (Index c = 0; c < e.state_dim(); ++c) e.positions()(k, c) = get_f64(is);
  if (header) *header = h;
  return e;
}

void write_snapshot_csv(const std::filesystem::path& path, const ParticleEnsemble& e) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "particle,block,component,value\n");
  for (Index k = 0; k < e.size(); ++k)
    for (int i = 0; i < e.blocks(); ++i)
      for (int c = 0; c < e.block_dim(); ++c)
        std::fprintf(f, "%lld,%d,%d,%.17g\n", static_cast<long long>(k), i, c,
                     e.positions()(k, static_cast<Index>(i) * e.block_dim() + c));
  std::fclose(f);
}

}  // namespace condmv
