#pragma once

#include "condmv/core.hpp"
#include "condmv/gaussian.hpp"
#include "condmv/kernels.hpp"
#include "condmv/rng.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace condmv {

/// How a coefficient b^i_j depends on the mixed point (x^j, y^{-j}).
///
/// The drift loops use the form to factor the kernel sum: a query_only
/// coefficient comes out of the sum, an atom_only one is evaluated once per
/// atom. The function itself always receives the full mixed point, so a
/// general evaluation gives the same value for every form.
enum class CoefficientForm { query_only, atom_only, general };

using BlockFunction = std::function<void(Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out)>;

struct Coefficient {
  CoefficientForm form = CoefficientForm::general;
  BlockFunction eval;  // empty means identically zero

  explicit operator bool() const noexcept { return static_cast<bool>(eval); }
};

/// Initial law: a seeded sampler and, when available, a closed-form Gaussian.
struct InitialLaw {
  std::string name;
  /// Draw for particle k. Must depend only on (rng seed, k).
  std::function<Vector(const CounterRng&, std::uint64_t particle)> sample;
  std::optional<GaussianLaw> gaussian;

  static InitialLaw from_gaussian(GaussianLaw law, int block_dim);
};

struct ModelBounds {
  double b_sup = 0.0;  // sup over i, j, x of |b^i_j(x)|
  double v_sup = 0.0;  // sup over i, x of |V^i(x)|
};

/// Exact limit drift for models whose conditional expectations are known.
struct Oracle {
  std::function<Vector(const Vector& x, double t)> drift;
  double valid_until = std::numeric_limits<double>::infinity();
};

/// Block-structured coefficients: m blocks of dimension d, drift families
/// b^i_j and V^i, scalar diffusion sigma (noise enters as sqrt(2) sigma dW).
struct ModelSpec {
  std::string name;
  int m = 1;
  int d = 1;
  double sigma = 1.0;
  std::vector<Coefficient> b;  // row-major m x m, b[i * m + j]
  /// All V^i at once, writing an m*d vector. Empty means V = 0.
  BlockFunction potential;
  InitialLaw mu0;
  ModelBounds bounds;
  double saturation = 0.0;  // smooth clamp level B, 0 when unused
  std::optional<Oracle> oracle;

  int state_dim() const noexcept { return m * d; }
  const Coefficient& coefficient(int i, int j) const { return b.at(static_cast<std::size_t>(i * m + j)); }
  /// Block j of a full state vector.
  static auto block(const Vector& x, int j, int d) { return x.segment(static_cast<Index>(j) * d, d); }
};

struct PresetOptions {
  double saturation = 10.0;         // B in B * tanh(u / B)
  double entropic_reg = 1.0;        // eot-flow noise/confinement weight
  int degree = 3;                   // local-field tree degree
  double coupling = 1.0;            // abf potential coupling
};

/// Smooth clamp B * tanh(u / B): bounded by B, slope 1 at the origin.
inline double saturate(double u, double level) { return level * std::tanh(u / level); }

/// eot-flow | local-field | abf | decoupled-oracle | frozen-independence
ModelSpec preset(std::string_view name, const PresetOptions& options = {});

const std::vector<std::string>& preset_names();

/// Exact limit drift Sum_j E[b^i_j(X_t) | X_t^j = x^j] + V^i(x), per block.
Vector oracle_drift(const ModelSpec& model, const Vector& x, double t);

/// Evaluates V at x; zero when the model has no potential.
Vector potential_at(const ModelSpec& model, const Vector& x);

/// Draws a kernel variate. Gaussian draws directly; compact radial kernels by
/// rejection from the unit cube.
template <typename Generator>
Vector sample_kernel(const KernelSpec& k, Generator& gen);

struct R1Estimate {
  int block = 0;
  double value = 0.0;
  double std_error = 0.0;  // zero for the quadrature path
  bool finite = false;
  std::string method;      // "closed-form+quadrature" or "monte-carlo"
};

struct R3Values {
  double abs_log_density = 0.0;     // E|log mu0|
  double score_fourth = 0.0;        // E|grad log mu0|^4
  double laplacian_ratio_sq = 0.0;  // E|Lap mu0 / mu0|^2
};

struct AssumptionRReport {
  std::vector<R1Estimate> r1;
  bool moments_finite = false;   // R.2
  std::optional<R3Values> r3;    // quadrature, state dimension <= 2 only
  double sup_density = 0.0;      // R.4
  bool bounded = false;
  bool positive = false;
  bool all_finite() const;
};

struct AssumptionROptions {
  int block_dim = 1;
  std::size_t monte_carlo_samples = 200000;
  std::uint64_t seed = 1;
  int outer_points = 201;  // Simpson nodes per axis over (s, u)
};

/// D4(mu0 shifted by a in block i || mu0) = exp(6 a^T P_ii a) for Gaussian mu0,
/// P the precision matrix.
double gaussian_block_shift_D4(const GaussianLaw& law, int block, int block_dim, const Vector& shift);

/// Reports on the initial-law hypotheses for a closed-form law.
AssumptionRReport check_assumption_R(const InitialLaw& mu0, double h, const KernelSpec& kernel,
                                     const AssumptionROptions& options = {});

/// exp(4 sqrt(h) score_bound |z|), the bound for laws with bounded score.
double subexponential_D4_bound(double score_bound, double h, double z);

// ---------------------------------------------------------------------------

template <typename Generator>
Vector sample_kernel(const KernelSpec& k, Generator& gen) {
  Vector z(k.dim);
  if (k.kind == KernelKind::gaussian) {
    std::normal_distribution<double> normal;
    for (auto& c : z) c = normal(gen);
    return z;
  }
  if (!k.radial() || !k.compact() || k.support_radius != 1.0)
    throw Error(ErrorCode::invalid_parameter, "no sampler for kernel '" + k.id + "'");
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> accept(0.0, k.sup_value);
  for (;;) {
    for (auto& c : z) c = unif(gen);
    const double r2 = z.squaredNorm();
    if (r2 > 1.0) continue;
    if (accept(gen) <= k.profile(r2)) return z;
  }
}

}  // namespace condmv
