#pragma once

#include "condmv/core.hpp"

#include <cstdint>

namespace condmv {

/// n particles, each a point in R^{m x d}, stored column-major as an
/// n x (m d) matrix: column j * d + c holds component c of block j for every
/// particle, so per-block coordinate sweeps read contiguous memory.
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;
  ParticleEnsemble(Index n, int m, int d, double t = 0.0);
  ParticleEnsemble(Matrix positions, int m, int d, double t = 0.0);

  Index size() const noexcept { return positions_.rows(); }
  int blocks() const noexcept { return m_; }
  int block_dim() const noexcept { return d_; }
  int state_dim() const noexcept { return m_ * d_; }
  double time() const noexcept { return t_; }
  void set_time(double t) noexcept { t_ = t; }

  const Matrix& positions() const noexcept { return positions_; }
  Matrix& positions() noexcept { return positions_; }

  Vector particle(Index k) const { return positions_.row(k).transpose(); }
  auto coordinate(int block, int component) const {
    return positions_.col(static_cast<Index>(block) * d_ + component);
  }

  bool all_finite() const { return positions_.allFinite(); }

  friend bool operator==(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    return a.m_ == b.m_ && a.d_ == b.d_ && a.t_ == b.t_ && a.positions_.rows() == b.positions_.rows() &&
           a.positions_ == b.positions_;
  }

 private:
  Matrix positions_;
  int m_ = 1;
  int d_ = 1;
  double t_ = 0.0;
};

}  // namespace condmv
