#pragma once

#include "condmv/core.hpp"

namespace condmv {

/// Multivariate normal with a validated symmetric positive-definite covariance.
class GaussianLaw {
 public:
  GaussianLaw(Vector mean, Matrix covariance);

  static GaussianLaw standard(Index dim);

  Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return cov_; }
  const Matrix& precision() const noexcept { return precision_; }
  /// Lower Cholesky factor L with L L^T = covariance.
  const Matrix& cholesky() const noexcept { return chol_; }
  double log_det() const noexcept { return log_det_; }

  double log_density(const Vector& x) const;
  double density(const Vector& x) const;
  /// Gradient of the log-density.
  Vector score(const Vector& x) const;
  /// Laplacian of the density divided by the density.
  double laplacian_ratio(const Vector& x) const;
  double sup_density() const;

  /// mean + L * xi for a standard normal vector xi.
  template <typename Derived>
  Vector transform(const Eigen::MatrixBase<Derived>& xi) const {
    return mean_ + chol_ * xi;
  }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  Matrix precision_;
  double log_det_ = 0.0;
};

}  // namespace condmv
