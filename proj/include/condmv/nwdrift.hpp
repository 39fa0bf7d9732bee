#pragma once

#include "condmv/core.hpp"
#include "condmv/ensemble.hpp"
#include "condmv/kernels.hpp"
#include "condmv/models.hpp"

#include <string>
#include <string_view>

namespace condmv {

/// Finitely supported probability measure on R^{m x d}: atoms are rows.
class WeightedMeasure {
 public:
  WeightedMeasure(Matrix atoms, Vector weights);

  /// Uniform weights 1/n over the ensemble, self included.
  static WeightedMeasure empirical(const ParticleEnsemble& ensemble);

  Index size() const noexcept { return atoms_.rows(); }
  const Matrix& atoms() const noexcept { return atoms_; }
  const Vector& weights() const noexcept { return weights_; }

 private:
  Matrix atoms_;
  Vector weights_;
};

/// Bandwidth h (variance scale), denominator floor epsilon and kernel.
struct DriftParams {
  double h = 0.1;
  double epsilon = 1e-6;
  KernelSpec kernel = make_kernel("gaussian", 1);

  void validate() const;
};

enum class Strategy { naive, celllist };

Strategy parse_strategy(std::string_view name);
std::string to_string(Strategy s);

/// Floored Nadaraya-Watson estimate of E[b(X) | X^j = x_j] against nu:
///
///   sum_l w_l b(x_j, y_l^{-j}) K_h(x_j - y_l^j) / max(eps, sum_l w_l K_h(x_j - y_l^j)).
///
/// The j-block argument of b is the query, the other blocks come from each atom.
/// Evaluated directly from this definition, one atom at a time.
Vector nw_block(const Vector& x_j, int j, const BlockFunction& b_ij, const WeightedMeasure& nu,
                const DriftParams& p, int block_dim);

struct DriftOptions {
  Strategy strategy = Strategy::naive;
  int workers = 1;
};

/// Drift of every particle under the empirical measure of the ensemble:
/// drift(k, block i) = sum_j nw_block(X_k^j, j, b^i_j, L_n(X)) + V^i(X_k).
///
/// When denominators is non-null it receives the n x m raw kernel averages
/// (before flooring), which the floor diagnostics reuse.
Matrix particle_drift(const ParticleEnsemble& ensemble, const ModelSpec& model, const DriftParams& p,
                      const DriftOptions& options = {}, Matrix* denominators = nullptr);

/// Per-particle kernel averages (1/n) sum_l K_h(X_k^j - X_l^j) for block j.
Vector block_denominators(const ParticleEnsemble& ensemble, int j, const DriftParams& p,
                          const DriftOptions& options = {});

/// Fraction of particles whose block-j kernel average is strictly below epsilon.
double floor_hit_rate(const ParticleEnsemble& ensemble, int j, const DriftParams& p,
                      const DriftOptions& options = {});

}  // namespace condmv
