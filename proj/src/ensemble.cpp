#include "condmv/ensemble.hpp"

namespace condmv {

ParticleEnsemble::ParticleEnsemble(Index n, int m, int d, double t)
    : positions_(Matrix::Zero(n, static_cast<Index>(m) * d)), m_(m), d_(d), t_(t) {
  require(n >= 0 && m >= 1 && d >= 1, ErrorCode::invalid_parameter, "invalid ensemble dimensions");
}

ParticleEnsemble::ParticleEnsemble(Matrix positions, int m, int d, double t)
    : positions_(std::move(positions)), m_(m), d_(d), t_(t) {
  require(m >= 1 && d >= 1 && positions_.cols() == static_cast<Index>(m) * d, ErrorCode::invalid_parameter,
          "positions must have m * d columns");
}

}  // namespace condmv
