#include "condmv/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace condmv {

GaussianLaw::GaussianLaw(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  require(cov_.rows() == cov_.cols() && cov_.rows() == mean_.size(), ErrorCode::invalid_parameter,
          "covariance shape does not match the mean");
  require(mean_.size() > 0, ErrorCode::invalid_parameter, "empty Gaussian law");
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::non_spd, "covariance is not symmetric");
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::non_spd, "covariance is not positive definite");
  chol_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(dim(), dim()));
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

GaussianLaw GaussianLaw::standard(Index dim) {
  return GaussianLaw(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

double GaussianLaw::log_density(const Vector& x) const {
  const Vector r = x - mean_;
  const Vector w = chol_.triangularView<Eigen::Lower>().solve(r);
  return -0.5 * (w.squaredNorm() + log_det_ + dim() * std::log(2.0 * std::numbers::pi));
}

double GaussianLaw::density(const Vector& x) const { return std::exp(log_density(x)); }

Vector GaussianLaw::score(const Vector& x) const { return -precision_ * (x - mean_); }

double GaussianLaw::laplacian_ratio(const Vector& x) const {
  return score(x).squaredNorm() - precision_.trace();
}

double GaussianLaw::sup_density() const {
  return std::exp(-0.5 * (log_det_ + dim() * std::log(2.0 * std::numbers::pi)));
}

}  // namespace condmv
